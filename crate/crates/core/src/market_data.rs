//! Bid/ask tick streams: file loading, synthetic generation, and simple
//! distribution summaries.
//!
//! All downstream maths run on mid-prices; the bid/ask pair is kept so the
//! ledger can pay the spread on every fill.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Smallest bid the random-walk generators will emit; walks are clamped so
/// prices never cross zero.
const MIN_BID: f64 = 1e-9;

/// Epoch used for synthetic timestamps.
fn synthetic_epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap()
}

/// One top-of-book quote.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickQuote {
    /// Consecutive position in the stream, starting at 0.
    pub index: u64,
    /// Quote time, millisecond resolution.
    pub timestamp: DateTime<Utc>,
    pub bid: f64,
    pub ask: f64,
}

impl TickQuote {
    pub fn mid(&self) -> f64 {
        0.5 * (self.bid + self.ask)
    }

    pub fn spread(&self) -> f64 {
        self.ask - self.bid
    }
}

/// Where a stream came from; zero-spread quotes are only legal in synthetic
/// streams and are flagged on the stream itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamSource {
    File,
    Synthetic,
}

/// An ordered quote sequence for one instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct TickStream {
    pub instrument: String,
    pub source: StreamSource,
    quotes: Vec<TickQuote>,
    zero_spread: bool,
}

impl TickStream {
    /// Builds a stream, enforcing bid < ask (bid == ask allowed only when
    /// `allow_zero_spread` is set) and consecutive indices from 0.
    pub fn from_quotes(
        instrument: impl Into<String>,
        source: StreamSource,
        quotes: Vec<TickQuote>,
        allow_zero_spread: bool,
    ) -> Result<Self> {
        if quotes.is_empty() {
            return Err(Error::EmptyStream);
        }
        let mut zero_spread = false;
        for (i, q) in quotes.iter().enumerate() {
            let row = i + 1;
            if !q.bid.is_finite() || !q.ask.is_finite() || q.bid <= 0.0 || q.ask <= 0.0 {
                return Err(Error::MalformedRow {
                    row,
                    reason: format!("non-positive or non-finite price (bid {}, ask {})", q.bid, q.ask),
                });
            }
            if q.bid > q.ask || (q.bid == q.ask && !allow_zero_spread) {
                return Err(Error::CrossedQuote {
                    row,
                    bid: q.bid,
                    ask: q.ask,
                });
            }
            if q.bid == q.ask {
                zero_spread = true;
            }
            if q.index != i as u64 {
                return Err(Error::MalformedRow {
                    row,
                    reason: format!("index {} out of sequence, expected {}", q.index, i),
                });
            }
        }
        Ok(Self {
            instrument: instrument.into(),
            source,
            quotes,
            zero_spread,
        })
    }

    pub fn quotes(&self) -> &[TickQuote] {
        &self.quotes
    }

    pub fn len(&self) -> usize {
        self.quotes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quotes.is_empty()
    }

    pub fn has_zero_spread(&self) -> bool {
        self.zero_spread
    }

    /// Mid-price series; this is the price the forecasting maths consume.
    pub fn mids(&self) -> Vec<f64> {
        self.quotes.iter().map(TickQuote::mid).collect()
    }

    /// Rebuilds the stream with a constant spread around unchanged mids.
    /// Used by spread sweeps; a zero spread is permitted and flagged.
    pub fn respread(&self, spread: f64) -> Result<TickStream> {
        if !(spread >= 0.0) {
            return Err(Error::InvalidSpread(spread));
        }
        let half = 0.5 * spread;
        let quotes = self
            .quotes
            .iter()
            .map(|q| {
                let mid = q.mid();
                TickQuote {
                    index: q.index,
                    timestamp: q.timestamp,
                    bid: mid - half,
                    ask: mid + half,
                }
            })
            .collect();
        TickStream::from_quotes(self.instrument.clone(), StreamSource::Synthetic, quotes, true)
    }
}

/// Loads `timestamp,bid,ask` CSV rows (ISO-8601 timestamps, optional header).
pub fn load_ticks(path: impl AsRef<Path>) -> Result<TickStream> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let instrument = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "ticks".to_string());

    let mut quotes = Vec::new();
    let mut data_row = 0usize;
    for (line_no, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        // A header line is tolerated in first position only.
        if line_no == 0 && trimmed.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
            continue;
        }
        data_row += 1;
        let quote = parse_tick_row(trimmed, data_row, quotes.len() as u64)?;
        if quote.bid >= quote.ask {
            return Err(Error::CrossedQuote {
                row: data_row,
                bid: quote.bid,
                ask: quote.ask,
            });
        }
        quotes.push(quote);
    }
    TickStream::from_quotes(instrument, StreamSource::File, quotes, false)
}

fn parse_tick_row(line: &str, row: usize, index: u64) -> Result<TickQuote> {
    let mut fields = line.split(',');
    let (ts, bid, ask) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
        (Some(ts), Some(bid), Some(ask), None) => (ts.trim(), bid.trim(), ask.trim()),
        _ => {
            return Err(Error::MalformedRow {
                row,
                reason: format!("expected 3 comma-separated fields, got {:?}", line),
            })
        }
    };
    let timestamp = DateTime::parse_from_rfc3339(ts)
        .map_err(|e| Error::MalformedRow {
            row,
            reason: format!("bad timestamp {:?}: {}", ts, e),
        })?
        .with_timezone(&Utc);
    let bid: f64 = bid.parse().map_err(|e| Error::MalformedRow {
        row,
        reason: format!("bad bid {:?}: {}", bid, e),
    })?;
    let ask: f64 = ask.parse().map_err(|e| Error::MalformedRow {
        row,
        reason: format!("bad ask {:?}: {}", ask, e),
    })?;
    if !bid.is_finite() || !ask.is_finite() || bid <= 0.0 || ask <= 0.0 {
        return Err(Error::MalformedRow {
            row,
            reason: format!("non-positive price (bid {}, ask {})", bid, ask),
        });
    }
    Ok(TickQuote {
        index,
        timestamp,
        bid,
        ask,
    })
}

/// Mid-price models for synthetic streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticModel {
    RandomWalk,
    RandomWalkDrift,
    Sinusoid,
}

/// Knobs for [`generate_synthetic`]; unused fields are ignored by each model.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SyntheticParams {
    pub start: f64,
    /// Per-tick standard deviation of the random-walk increment.
    pub volatility: f64,
    /// Per-tick deterministic increment for the drifting walk.
    pub drift: f64,
    pub amplitude: f64,
    /// Sinusoid period in ticks; fractional periods are allowed.
    pub period: f64,
    /// Constant ask - bid; quotes sit symmetrically around the mid.
    pub spread: f64,
    pub interval_ms: u64,
    pub instrument: String,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            start: 1.3,
            volatility: 1e-4,
            drift: 0.0,
            amplitude: 0.01,
            period: 50.0,
            spread: 2e-4,
            interval_ms: 1000,
            instrument: "SYN".to_string(),
        }
    }
}

/// Generates `n` quotes from a seeded mid-price model. Same (seed, model,
/// params) always yields the identical stream.
pub fn generate_synthetic(
    seed: u64,
    n: usize,
    model: SyntheticModel,
    params: &SyntheticParams,
) -> Result<TickStream> {
    if n == 0 {
        return Err(Error::InvalidGenerator("n must be positive".into()));
    }
    if !(params.spread >= 0.0) {
        return Err(Error::InvalidGenerator(format!(
            "spread {} must be non-negative",
            params.spread
        )));
    }
    if params.interval_ms == 0 {
        return Err(Error::InvalidGenerator("interval_ms must be positive".into()));
    }
    let half = 0.5 * params.spread;
    if params.start - half <= 0.0 {
        return Err(Error::InvalidGenerator(format!(
            "start {} too small for spread {}",
            params.start, params.spread
        )));
    }
    match model {
        SyntheticModel::RandomWalk | SyntheticModel::RandomWalkDrift => {
            if !(params.volatility >= 0.0) {
                return Err(Error::InvalidGenerator(format!(
                    "volatility {} must be non-negative",
                    params.volatility
                )));
            }
        }
        SyntheticModel::Sinusoid => {
            if params.period < 2.0 {
                return Err(Error::InvalidGenerator(format!(
                    "period {} must be >= 2 ticks",
                    params.period
                )));
            }
            if !(params.amplitude >= 0.0) {
                return Err(Error::InvalidGenerator(format!(
                    "amplitude {} must be non-negative",
                    params.amplitude
                )));
            }
            // Reject parameterizations whose bid could touch zero.
            if params.start - params.amplitude - half <= 0.0 {
                return Err(Error::InvalidGenerator(format!(
                    "start {} minus amplitude {} leaves no room for spread {}",
                    params.start, params.amplitude, params.spread
                )));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let epoch = synthetic_epoch();
    let drift = match model {
        SyntheticModel::RandomWalkDrift => params.drift,
        _ => 0.0,
    };
    let mut mid = params.start;
    let mut quotes = Vec::with_capacity(n);
    for i in 0..n {
        let m = match model {
            SyntheticModel::RandomWalk | SyntheticModel::RandomWalkDrift => {
                if i > 0 {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    mid += drift + params.volatility * z;
                    // Clamp instead of rejecting: a walk may wander toward zero.
                    mid = mid.max(half + MIN_BID);
                }
                mid
            }
            SyntheticModel::Sinusoid => {
                params.start
                    + params.amplitude * (2.0 * std::f64::consts::PI * i as f64 / params.period).sin()
            }
        };
        quotes.push(TickQuote {
            index: i as u64,
            timestamp: epoch + Duration::milliseconds((i as u64 * params.interval_ms) as i64),
            bid: m - half,
            ask: m + half,
        });
    }
    TickStream::from_quotes(
        params.instrument.clone(),
        StreamSource::Synthetic,
        quotes,
        params.spread == 0.0,
    )
}

/// Fixed-width histogram of ask - bid over a stream.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadHistogram {
    pub bin_width: f64,
    counts: BTreeMap<i64, u64>,
}

impl SpreadHistogram {
    /// (bin lower edge, count) in ascending bin order.
    pub fn bins(&self) -> impl Iterator<Item = (f64, u64)> + '_ {
        self.counts.iter().map(|(idx, c)| (*idx as f64 * self.bin_width, *c))
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

/// Bins every quote's spread into [k*w, (k+1)*w). A value sitting exactly on
/// a boundary lands in the upper bin despite float noise.
pub fn spread_histogram(stream: &TickStream, bin_width: f64) -> Result<SpreadHistogram> {
    if !(bin_width > 0.0) {
        return Err(Error::InvalidHistogram(format!(
            "bin width {} must be positive",
            bin_width
        )));
    }
    let mut counts = BTreeMap::new();
    for q in stream.quotes() {
        let idx = (q.spread() / bin_width + 1e-9).floor() as i64;
        *counts.entry(idx).or_insert(0) += 1;
    }
    Ok(SpreadHistogram { bin_width, counts })
}

/// Counts events per UTC calendar day; used for the closed-trades-per-day
/// distribution.
pub fn trades_per_day_histogram(close_times: &[DateTime<Utc>]) -> BTreeMap<NaiveDate, u64> {
    let mut counts = BTreeMap::new();
    for t in close_times {
        *counts.entry(t.date_naive()).or_insert(0) += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir();
        let path = dir.join(format!("ticks_{}_{}.csv", std::process::id(), rand::random::<u64>()));
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn loads_two_rows_with_consecutive_indices() {
        let path = write_temp(
            "2024-03-01T10:00:00.000Z,1.30000,1.30020\n2024-03-01T10:00:00.250Z,1.30005,1.30025\n",
        );
        let stream = load_ticks(&path).unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(stream.len(), 2);
        assert_eq!(stream.quotes()[0].index, 0);
        assert_eq!(stream.quotes()[1].index, 1);
        assert_eq!(stream.quotes()[0].bid, 1.30000);
        assert_eq!(stream.quotes()[1].ask, 1.30025);
        assert_eq!(stream.source, StreamSource::File);
    }

    #[test]
    fn header_row_is_tolerated() {
        let path = write_temp("timestamp,bid,ask\n2024-03-01T10:00:00.000Z,1.1,1.2\n");
        let stream = load_ticks(&path).unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(stream.len(), 1);
    }

    #[test]
    fn crossed_quote_reports_row_number() {
        let path = write_temp("2024-03-01T10:00:00.000Z,1.30020,1.30000\n");
        let err = load_ticks(&path).unwrap_err();
        std::fs::remove_file(&path).ok();
        match err {
            Error::CrossedQuote { row, bid, ask } => {
                assert_eq!(row, 1);
                assert_eq!(bid, 1.30020);
                assert_eq!(ask, 1.30000);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn equal_bid_ask_in_file_is_rejected() {
        let path = write_temp("2024-03-01T10:00:00.000Z,1.3,1.3\n");
        let err = load_ticks(&path).unwrap_err();
        std::fs::remove_file(&path).ok();
        assert!(matches!(err, Error::CrossedQuote { row: 1, .. }));
    }

    #[test]
    fn empty_file_is_an_error() {
        let path = write_temp("");
        let err = load_ticks(&path).unwrap_err();
        std::fs::remove_file(&path).ok();
        assert!(matches!(err, Error::EmptyStream));
    }

    #[test]
    fn malformed_row_is_reported_with_its_number() {
        let path = write_temp("2024-03-01T10:00:00.000Z,1.1,1.2\nnot-a-time,1.1,1.2\n");
        let err = load_ticks(&path).unwrap_err();
        std::fs::remove_file(&path).ok();
        assert!(matches!(err, Error::MalformedRow { row: 2, .. }));
    }

    #[test]
    fn missing_file_is_an_io_error() {
        let err = load_ticks("/nonexistent/nowhere.csv").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn zero_volatility_walk_is_constant_with_symmetric_spread() {
        let params = SyntheticParams {
            start: 1.0,
            volatility: 0.0,
            spread: 0.0002,
            ..SyntheticParams::default()
        };
        let stream = generate_synthetic(42, 5, SyntheticModel::RandomWalk, &params).unwrap();
        assert_eq!(stream.len(), 5);
        for q in stream.quotes() {
            assert_eq!(q.bid, 0.9999);
            assert_eq!(q.ask, 1.0001);
        }
    }

    #[test]
    fn sinusoid_follows_documented_formula() {
        let params = SyntheticParams {
            start: 1.0,
            amplitude: 0.01,
            period: 50.0,
            spread: 0.0002,
            ..SyntheticParams::default()
        };
        let stream = generate_synthetic(7, 100, SyntheticModel::Sinusoid, &params).unwrap();
        let mid0 = stream.quotes()[0].mid();
        assert!((mid0 - 1.0).abs() < 1e-12);
        let expected12 = 1.0 + 0.01 * (2.0 * std::f64::consts::PI * 12.0 / 50.0).sin();
        let mid12 = stream.quotes()[12].mid();
        assert!((mid12 - expected12).abs() < 1e-12, "mid(12) = {mid12}");
        // Same value to the published 5-decimal approximation.
        assert!((mid12 - 1.00998).abs() < 1e-5);
    }

    #[test]
    fn generator_is_deterministic_per_seed() {
        let params = SyntheticParams::default();
        let a = generate_synthetic(9, 200, SyntheticModel::RandomWalk, &params).unwrap();
        let b = generate_synthetic(9, 200, SyntheticModel::RandomWalk, &params).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic(10, 200, SyntheticModel::RandomWalk, &params).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn drift_walk_moves_on_average() {
        let params = SyntheticParams {
            start: 1.3,
            volatility: 0.0,
            drift: 0.001,
            ..SyntheticParams::default()
        };
        let stream = generate_synthetic(1, 10, SyntheticModel::RandomWalkDrift, &params).unwrap();
        let mids = stream.mids();
        assert!((mids[9] - (1.3 + 0.009)).abs() < 1e-12);
    }

    #[test]
    fn walk_never_crosses_zero() {
        let params = SyntheticParams {
            start: 0.01,
            volatility: 0.05,
            spread: 0.0002,
            ..SyntheticParams::default()
        };
        let stream = generate_synthetic(3, 2000, SyntheticModel::RandomWalk, &params).unwrap();
        for q in stream.quotes() {
            assert!(q.bid > 0.0);
        }
    }

    #[test]
    fn invalid_generator_parameters_are_rejected() {
        let p = SyntheticParams::default();
        assert!(matches!(
            generate_synthetic(1, 0, SyntheticModel::RandomWalk, &p),
            Err(Error::InvalidGenerator(_))
        ));
        let bad = SyntheticParams {
            start: 0.0001,
            spread: 0.01,
            ..p.clone()
        };
        assert!(matches!(
            generate_synthetic(1, 10, SyntheticModel::RandomWalk, &bad),
            Err(Error::InvalidGenerator(_))
        ));
        let bad = SyntheticParams {
            period: 1.0,
            ..p.clone()
        };
        assert!(matches!(
            generate_synthetic(1, 10, SyntheticModel::Sinusoid, &bad),
            Err(Error::InvalidGenerator(_))
        ));
        let bad = SyntheticParams {
            start: 1.0,
            amplitude: 1.5,
            ..p
        };
        assert!(matches!(
            generate_synthetic(1, 10, SyntheticModel::Sinusoid, &bad),
            Err(Error::InvalidGenerator(_))
        ));
    }

    #[test]
    fn spread_histogram_matches_hand_counts() {
        let epoch = synthetic_epoch();
        let quotes = vec![
            TickQuote { index: 0, timestamp: epoch, bid: 1.0000, ask: 1.0001 },
            TickQuote { index: 1, timestamp: epoch, bid: 1.0000, ask: 1.0001 },
            TickQuote { index: 2, timestamp: epoch, bid: 1.0000, ask: 1.0003 },
        ];
        let stream = TickStream::from_quotes("t", StreamSource::Synthetic, quotes, false).unwrap();
        let hist = spread_histogram(&stream, 0.0001).unwrap();
        let bins: Vec<(f64, u64)> = hist.bins().collect();
        assert_eq!(bins.len(), 2);
        assert!((bins[0].0 - 0.0001).abs() < 1e-12);
        assert_eq!(bins[0].1, 2);
        assert!((bins[1].0 - 0.0003).abs() < 1e-12);
        assert_eq!(bins[1].1, 1);
        assert_eq!(hist.total(), 3);
    }

    #[test]
    fn constant_spread_stream_fills_a_single_bin() {
        let params = SyntheticParams {
            spread: 0.0002,
            ..SyntheticParams::default()
        };
        let stream = generate_synthetic(5, 1000, SyntheticModel::RandomWalk, &params).unwrap();
        let hist = spread_histogram(&stream, 0.0001).unwrap();
        let bins: Vec<(f64, u64)> = hist.bins().collect();
        assert_eq!(bins.len(), 1);
        assert_eq!(bins[0].1, 1000);
        assert_eq!(hist.total(), stream.len() as u64);
    }

    #[test]
    fn zero_bin_width_is_rejected() {
        let stream =
            generate_synthetic(1, 3, SyntheticModel::RandomWalk, &SyntheticParams::default()).unwrap();
        assert!(matches!(
            spread_histogram(&stream, 0.0),
            Err(Error::InvalidHistogram(_))
        ));
    }

    #[test]
    fn trades_per_day_counts_by_utc_date() {
        let day_a = Utc.with_ymd_and_hms(2024, 3, 1, 9, 0, 0).unwrap();
        let day_b = Utc.with_ymd_and_hms(2024, 3, 2, 9, 0, 0).unwrap();
        let times = vec![
            day_a,
            day_a + Duration::hours(2),
            day_a + Duration::hours(5),
            day_b,
        ];
        let hist = trades_per_day_histogram(&times);
        assert_eq!(hist.len(), 2);
        assert_eq!(hist[&day_a.date_naive()], 3);
        assert_eq!(hist[&day_b.date_naive()], 1);
        assert!(trades_per_day_histogram(&[]).is_empty());
    }

    #[test]
    fn respread_preserves_mids_and_flags_zero_spread() {
        let stream =
            generate_synthetic(2, 50, SyntheticModel::RandomWalk, &SyntheticParams::default()).unwrap();
        let wide = stream.respread(0.0004).unwrap();
        for (a, b) in stream.quotes().iter().zip(wide.quotes()) {
            assert!((a.mid() - b.mid()).abs() < 1e-15);
            assert!((b.spread() - 0.0004).abs() < 1e-15);
        }
        let flat = stream.respread(0.0).unwrap();
        assert!(flat.has_zero_spread());
        assert!(matches!(stream.respread(-0.1), Err(Error::InvalidSpread(_))));
    }
}
