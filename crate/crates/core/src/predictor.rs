//! Turns momentum streams into per-set trade signals and aggregates them.
//!
//! Each parameter set owns a predictor state. A state learns a momentum band
//! from its own history; a momentum falling inside the band fires a signal in
//! the direction of the recent price slope. Signals from all sets are averaged
//! into a single summary value in [-1, 1].

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::string::{MomentumRecord, StringParams};

/// Tuning for the band-learning predictor.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PredictorConfig {
    /// Momenta observed before any signal is emitted.
    pub warmup: usize,
    /// Rolling history length used for quantile estimation.
    pub band_window: usize,
    /// Re-estimate the band every this many observations.
    pub band_refresh: usize,
    /// Band before enough history exists.
    pub initial_band: (f64, f64),
    /// Quantile pair the band tracks.
    pub band_quantiles: (f64, f64),
}

impl Default for PredictorConfig {
    fn default() -> Self {
        Self {
            warmup: 500,
            band_window: 5000,
            band_refresh: 500,
            initial_band: (0.3, 0.4),
            band_quantiles: (0.30, 0.40),
        }
    }
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.initial_band;
        let (qlo, qhi) = self.band_quantiles;
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::InvalidParams(format!("initial band ({lo}, {hi}) not ordered in [0, 1]")));
        }
        if !(0.0 <= qlo && qlo < qhi && qhi <= 1.0) {
            return Err(Error::InvalidParams(format!("band quantiles ({qlo}, {qhi}) not ordered in [0, 1]")));
        }
        if self.band_window == 0 || self.band_refresh == 0 {
            return Err(Error::InvalidParams("band window and refresh must be positive".into()));
        }
        Ok(())
    }
}

/// Per-set signal generator. Holds a bounded momentum history and the band
/// learned from it.
#[derive(Debug, Clone)]
pub struct PredictorState {
    params: StringParams,
    config: PredictorConfig,
    history: VecDeque<f64>,
    band: (f64, f64),
    observed: usize,
}

impl PredictorState {
    pub fn new(params: StringParams, config: PredictorConfig) -> Result<Self> {
        params.validate()?;
        config.validate()?;
        Ok(Self {
            params,
            config,
            history: VecDeque::with_capacity(config.band_window.min(1 << 16)),
            band: config.initial_band,
            observed: 0,
        })
    }

    pub fn params(&self) -> &StringParams {
        &self.params
    }

    /// Current (lo, hi) momentum band.
    pub fn learned_band(&self) -> (f64, f64) {
        self.band
    }

    pub fn warmed_up(&self) -> bool {
        self.observed > self.config.warmup
    }

    /// Consumes one momentum record and returns a signal in {-1, 0, +1}.
    ///
    /// Returns 0 while warming up, for degenerate momenta (which are also
    /// excluded from the history), and whenever the momentum falls outside
    /// the learned band. Inside the band it returns `direction_hint`.
    pub fn update_and_signal(&mut self, m: &MomentumRecord, direction_hint: i8) -> Result<i8> {
        if m.params != self.params {
            return Err(Error::ParamsMismatch);
        }
        if m.degenerate {
            return Ok(0);
        }
        if self.history.len() == self.config.band_window {
            self.history.pop_front();
        }
        self.history.push_back(m.value);
        self.observed += 1;
        if self.observed % self.config.band_refresh == 0 && self.observed >= self.config.warmup {
            self.refresh_band();
        }
        if self.observed <= self.config.warmup {
            return Ok(0);
        }
        let (lo, hi) = self.band;
        if lo < m.value && m.value < hi {
            Ok(direction_hint.signum())
        } else {
            Ok(0)
        }
    }

    /// Re-estimates the band from history quantiles; a collapsed estimate
    /// (lo >= hi, e.g. from near-constant momenta) keeps the previous band.
    fn refresh_band(&mut self) {
        let mut sorted: Vec<f64> = self.history.iter().copied().collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let lo = quantile(&sorted, self.config.band_quantiles.0);
        let hi = quantile(&sorted, self.config.band_quantiles.1);
        if lo < hi {
            self.band = (lo, hi);
        }
    }
}

/// Linear-interpolation quantile of an ascending slice.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    if sorted.len() == 1 {
        return sorted[0];
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let idx = pos.floor() as usize;
    let frac = pos - idx as f64;
    if idx + 1 >= sorted.len() {
        sorted[sorted.len() - 1]
    } else {
        sorted[idx] * (1.0 - frac) + sorted[idx + 1] * frac
    }
}

/// Sign of the mid-price change over the trailing half-window; 0 while the
/// stream is too short or when the price is unchanged.
pub fn direction_hint(mids: &[f64], t: usize, window_len: usize) -> i8 {
    let half = (window_len / 2).max(1);
    if t < half || t >= mids.len() {
        return 0;
    }
    let delta = mids[t] - mids[t - half];
    if delta > 0.0 {
        1
    } else if delta < 0.0 {
        -1
    } else {
        0
    }
}

/// The per-tick decision handed to the backtester: every set's signal plus
/// their plain average.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeCommand {
    pub tau: u64,
    pub per_set: Vec<i8>,
    /// Mean of `per_set`, in [-1, 1].
    pub summary: f64,
}

/// Averages `n_s` per-set signals into a summary command.
pub fn aggregate(tau: u64, values: &[i8], n_s: usize) -> Result<TradeCommand> {
    if values.len() != n_s {
        return Err(Error::ArityMismatch {
            expected: n_s,
            got: values.len(),
        });
    }
    let mut sum = 0i64;
    for (index, &v) in values.iter().enumerate() {
        if !(-1..=1).contains(&v) {
            return Err(Error::InvalidSignal { index, value: v });
        }
        sum += v as i64;
    }
    Ok(TradeCommand {
        tau,
        per_set: values.to_vec(),
        summary: sum as f64 / n_s as f64,
    })
}

/// Equal-width histogram over [0, 1] normalized to unit total mass.
#[derive(Debug, Clone, PartialEq)]
pub struct MassHistogram {
    masses: Vec<f64>,
}

impl MassHistogram {
    /// Normalizes raw bin counts; an all-zero count vector stays all zero.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidHistogram("bin count must be positive".into()));
        }
        let total: u64 = counts.iter().sum();
        let masses = if total == 0 {
            vec![0.0; counts.len()]
        } else {
            counts.iter().map(|&c| c as f64 / total as f64).collect()
        };
        Ok(Self { masses })
    }

    pub fn n_bins(&self) -> usize {
        self.masses.len()
    }

    /// (bin lower edge, mass) pairs over [0, 1].
    pub fn bins(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let w = 1.0 / self.masses.len() as f64;
        self.masses.iter().enumerate().map(move |(i, &m)| (i as f64 * w, m))
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }
}

/// Bin index of a momentum value in a `bins`-wide histogram over [0, 1];
/// the value 1.0 belongs to the last bin.
pub fn momentum_bin(value: f64, bins: usize) -> Result<usize> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::InvalidHistogram(format!("momentum {value} outside [0, 1]")));
    }
    Ok(((value * bins as f64) as usize).min(bins - 1))
}

/// Histograms of all computed momenta ("incoming") and of the subset that
/// produced nonzero signals ("outgoing"), each normalized to unit mass.
pub fn momentum_histograms(
    incoming: &[f64],
    outgoing: &[f64],
    bins: usize,
) -> Result<(MassHistogram, MassHistogram)> {
    if bins == 0 {
        return Err(Error::InvalidHistogram("bin count must be positive".into()));
    }
    let build = |values: &[f64]| -> Result<MassHistogram> {
        let mut counts = vec![0u64; bins];
        for &v in values {
            counts[momentum_bin(v, bins)?] += 1;
        }
        MassHistogram::from_counts(&counts)
    };
    Ok((build(incoming)?, build(outgoing)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::string::RegularFunction;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn test_params() -> StringParams {
        StringParams {
            window_len: 10,
            frequency: 1,
            exponent: 2.0,
            func: RegularFunction::Cos,
            phase: 0.0,
        }
    }

    fn record(value: f64) -> MomentumRecord {
        MomentumRecord {
            tau: 0,
            params: test_params(),
            value,
            degenerate: false,
        }
    }

    #[test]
    fn warmup_produces_zero_signals() {
        let mut state = PredictorState::new(test_params(), PredictorConfig::default()).unwrap();
        for _ in 0..500 {
            assert_eq!(state.update_and_signal(&record(0.35), 1).unwrap(), 0);
        }
        assert!(!state.warmed_up());
        // Observation 501 is past warm-up; 0.35 sits inside the band, which
        // stayed at (0.3, 0.4) because the constant history collapses the
        // quantile estimate.
        assert_eq!(state.update_and_signal(&record(0.35), 1).unwrap(), 1);
        assert!(state.warmed_up());
        assert_eq!(state.learned_band(), (0.3, 0.4));
    }

    #[test]
    fn signal_follows_direction_hint_inside_band() {
        let mut state = PredictorState::new(test_params(), PredictorConfig::default()).unwrap();
        for _ in 0..600 {
            state.update_and_signal(&record(0.35), 1).unwrap();
        }
        assert_eq!(state.update_and_signal(&record(0.35), -1).unwrap(), -1);
        assert_eq!(state.update_and_signal(&record(0.35), 0).unwrap(), 0);
        assert_eq!(state.update_and_signal(&record(0.95), 1).unwrap(), 0);
        assert_eq!(state.update_and_signal(&record(0.05), -1).unwrap(), 0);
    }

    #[test]
    fn degenerate_momenta_are_ignored() {
        let mut state = PredictorState::new(test_params(), PredictorConfig::default()).unwrap();
        let degenerate = MomentumRecord {
            degenerate: true,
            ..record(0.35)
        };
        for _ in 0..700 {
            assert_eq!(state.update_and_signal(&degenerate, 1).unwrap(), 0);
        }
        // None of them counted toward warm-up.
        assert!(!state.warmed_up());
    }

    #[test]
    fn mismatched_params_are_rejected(){
        let mut state = PredictorState::new(test_params(), PredictorConfig::default()).unwrap();
        let other = MomentumRecord {
            params: StringParams {
                frequency: 2,
                ..test_params()
            },
            ..record(0.35)
        };
        assert!(matches!(state.update_and_signal(&other, 1), Err(Error::ParamsMismatch)));
    }

    #[test]
    fn band_tracks_history_quantiles() {
        let config = PredictorConfig {
            warmup: 10,
            band_window: 100,
            band_refresh: 10,
            ..PredictorConfig::default()
        };
        let mut state = PredictorState::new(test_params(), config).unwrap();
        let mut fed = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let v: f64 = rng.gen_range(0.0..1.0);
            fed.push(v);
            state.update_and_signal(&record(v), 1).unwrap();
        }
        let mut sorted = fed.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expect = (quantile(&sorted, 0.30), quantile(&sorted, 0.40));
        assert_eq!(state.learned_band(), expect);
        let (lo, hi) = state.learned_band();
        assert!(0.0 <= lo && lo < hi && hi <= 1.0);
    }

    #[test]
    fn quantile_interpolates_linearly() {
        let sorted = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&sorted, 0.0), 0.0);
        assert_eq!(quantile(&sorted, 1.0), 4.0);
        assert_eq!(quantile(&sorted, 0.5), 2.0);
        assert!((quantile(&sorted, 0.30) - 1.2).abs() < 1e-12);
        assert_eq!(quantile(&[7.0], 0.5), 7.0);
    }

    #[test]
    fn direction_hint_signs_the_half_window_slope() {
        let mids = [1.0, 1.1, 1.2, 1.3, 1.2, 1.1];
        assert_eq!(direction_hint(&mids, 3, 4), 1);
        assert_eq!(direction_hint(&mids, 5, 4), -1);
        assert_eq!(direction_hint(&mids, 1, 4), 0);
        assert_eq!(direction_hint(&[1.0, 1.0, 1.0], 2, 4), 0);
    }

    #[test]
    fn aggregate_averages_signals() {
        let cmd = aggregate(3, &[1, 1, 0, 0], 4).unwrap();
        assert_eq!(cmd.summary, 0.5);
        assert_eq!(cmd.tau, 3);
        assert_eq!(aggregate(0, &[0; 5], 5).unwrap().summary, 0.0);
        let mut values = vec![1i8; 7];
        values.push(-1);
        values.extend([0; 8]);
        let cmd = aggregate(0, &values, 16).unwrap();
        assert_eq!(cmd.summary, 0.375);
    }

    #[test]
    fn aggregate_validates_arity_and_alphabet() {
        assert!(matches!(
            aggregate(0, &[1, 0], 3),
            Err(Error::ArityMismatch { expected: 3, got: 2 })
        ));
        assert!(matches!(
            aggregate(0, &[1, 2], 2),
            Err(Error::InvalidSignal { index: 1, value: 2 })
        ));
    }

    #[test]
    fn summary_is_bounded_for_random_signals() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.gen_range(1..40);
            let values: Vec<i8> = (0..n).map(|_| rng.gen_range(-1..=1)).collect();
            let cmd = aggregate(0, &values, n).unwrap();
            assert!(cmd.summary.abs() <= 1.0);
        }
    }

    #[test]
    fn histogram_puts_constant_values_in_one_bin() {
        let values = vec![0.35; 50];
        let (incoming, outgoing) = momentum_histograms(&values, &values, 10).unwrap();
        assert_eq!(incoming, outgoing);
        let bins: Vec<(f64, f64)> = incoming.bins().collect();
        assert_eq!(bins.len(), 10);
        assert_eq!(bins[3].1, 1.0);
        assert!((bins[3].0 - 0.3).abs() < 1e-12);
        assert!((incoming.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_draws_spread_mass_evenly() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let values: Vec<f64> = (0..1000).map(|_| rng.gen_range(0.0..1.0)).collect();
        let (incoming, _) = momentum_histograms(&values, &[], 10).unwrap();
        for (_, mass) in incoming.bins() {
            assert!((mass - 0.1).abs() < 0.05, "mass {mass}");
        }
        assert!((incoming.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn histogram_edge_cases() {
        // 1.0 lands in the last bin; empty input keeps zero mass.
        let (incoming, outgoing) = momentum_histograms(&[1.0], &[], 4).unwrap();
        let bins: Vec<(f64, f64)> = incoming.bins().collect();
        assert_eq!(bins[3].1, 1.0);
        assert_eq!(outgoing.total_mass(), 0.0);
        assert!(matches!(
            momentum_histograms(&[1.5], &[], 4),
            Err(Error::InvalidHistogram(_))
        ));
        assert!(matches!(
            momentum_histograms(&[], &[], 0),
            Err(Error::InvalidHistogram(_))
        ));
    }
}
