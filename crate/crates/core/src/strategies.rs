//! Comparison strategies: a scalper, a MACD crossover follower, and three
//! closed-form random-walk/mean forecasters. Each one only produces per-tick
//! commands; fills and accounting go through the same ledger as everything
//! else.

use crate::backtester::{Side, StrategyConfig, TradeInstruction, TradePosition};
use crate::error::{Error, Result};
use crate::market_data::TickQuote;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchmarkKind {
    Scalper,
    Macd,
    /// Constant-mean model: forecast = rolling mean + c.
    Arima000C,
    /// Random walk: forecast = last price.
    Arima010,
    /// Random walk with drift: forecast = last price + c.
    Arima010C,
}

impl BenchmarkKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BenchmarkKind::Scalper => "scalper",
            BenchmarkKind::Macd => "macd",
            BenchmarkKind::Arima000C => "arima_000_c",
            BenchmarkKind::Arima010 => "arima_010",
            BenchmarkKind::Arima010C => "arima_010_c",
        }
    }
}

impl std::fmt::Display for BenchmarkKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BenchmarkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scalper" => Ok(BenchmarkKind::Scalper),
            "macd" => Ok(BenchmarkKind::Macd),
            "arima_000_c" => Ok(BenchmarkKind::Arima000C),
            "arima_010" => Ok(BenchmarkKind::Arima010),
            "arima_010_c" => Ok(BenchmarkKind::Arima010C),
            other => Err(Error::InvalidBenchmark(other.to_string())),
        }
    }
}

/// Knobs for all benchmark strategies; each kind reads only its own fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkConfig {
    pub kind: BenchmarkKind,
    /// Drift/mean constant in price units per tick (ARIMA variants).
    pub c: f64,
    pub macd_fast: usize,
    pub macd_slow: usize,
    pub macd_signal: usize,
    /// Tick-to-bar factor: every MACD period is multiplied by this.
    pub macd_scale: usize,
    /// Scalper exit offsets from the entry price, in price units.
    pub take_profit: f64,
    pub stop_loss: f64,
    /// Rolling-mean span for the constant-mean forecaster.
    pub mean_window: usize,
    /// Minimum |forecast - mid| before an ARIMA forecast becomes a signal.
    pub dead_band: f64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            kind: BenchmarkKind::Arima010,
            c: 0.0,
            macd_fast: 12,
            macd_slow: 26,
            macd_signal: 9,
            macd_scale: 1,
            take_profit: 5e-4,
            stop_loss: 5e-4,
            mean_window: 1000,
            dead_band: 0.0,
        }
    }
}

impl BenchmarkConfig {
    pub fn for_kind(kind: BenchmarkKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    /// MACD periods after the tick-to-bar scaling.
    pub fn macd_periods(&self) -> (usize, usize, usize) {
        (
            self.macd_fast * self.macd_scale,
            self.macd_slow * self.macd_scale,
            self.macd_signal * self.macd_scale,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !self.c.is_finite() {
            return Err(Error::InvalidParams(format!("c must be finite, got {}", self.c)));
        }
        if self.macd_fast == 0 || self.macd_signal == 0 || self.macd_scale == 0 {
            return Err(Error::InvalidParams("MACD periods and scale must be positive".into()));
        }
        if self.macd_fast >= self.macd_slow {
            return Err(Error::InvalidParams(format!(
                "MACD fast period {} must be shorter than slow period {}",
                self.macd_fast, self.macd_slow
            )));
        }
        if !(self.take_profit > 0.0) || !(self.stop_loss > 0.0) {
            return Err(Error::InvalidParams("take-profit and stop-loss must be positive".into()));
        }
        if self.mean_window == 0 {
            return Err(Error::InvalidParams("mean window must be positive".into()));
        }
        if !(self.dead_band >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "dead band must be non-negative, got {}",
                self.dead_band
            )));
        }
        Ok(())
    }
}

/// Next-tick price forecast from the ARIMA-family model in `config`.
pub fn arima_forecast(config: &BenchmarkConfig, history: &[f64]) -> Result<f64> {
    config.validate()?;
    if history.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let last = *history.last().unwrap();
    match config.kind {
        BenchmarkKind::Arima010 => Ok(last),
        BenchmarkKind::Arima010C => Ok(last + config.c),
        BenchmarkKind::Arima000C => {
            let span = config.mean_window.min(history.len());
            let tail = &history[history.len() - span..];
            Ok(tail.iter().sum::<f64>() / span as f64 + config.c)
        }
        other => Err(Error::InvalidBenchmark(format!("{other} does not forecast prices"))),
    }
}

/// Dead-band sign rule on a forecast-minus-price gap; shared by the batch
/// and incremental ARIMA paths.
pub fn gap_signal(gap: f64, dead_band: f64) -> i8 {
    if gap > dead_band {
        1
    } else if gap < -dead_band {
        -1
    } else {
        0
    }
}

/// Trading signal from an ARIMA forecast: the sign of (forecast - mid) once
/// it clears the dead band, else 0.
pub fn arima_signal(config: &BenchmarkConfig, history: &[f64], mid: f64) -> Result<i8> {
    Ok(gap_signal(
        arima_forecast(config, history)? - mid,
        config.dead_band,
    ))
}

#[derive(Debug, Clone, Copy)]
struct Ema {
    alpha: f64,
    value: Option<f64>,
}

impl Ema {
    fn new(period: usize) -> Self {
        Self {
            alpha: 2.0 / (period as f64 + 1.0),
            value: None,
        }
    }

    /// First observation seeds the average; after that the usual recursion.
    fn update(&mut self, x: f64) -> f64 {
        let v = match self.value {
            None => x,
            Some(prev) => prev + self.alpha * (x - prev),
        };
        self.value = Some(v);
        v
    }
}

/// Incremental MACD crossover detector. Feed prices tick by tick; output is
/// +1 on an upward crossing of the MACD line over its signal line, -1 on a
/// downward crossing, 0 otherwise. Nothing is emitted before `slow` scaled
/// periods have been observed.
#[derive(Debug, Clone)]
pub struct MacdState {
    fast: Ema,
    slow: Ema,
    signal: Ema,
    prev_delta: Option<f64>,
    observed: usize,
    warmup: usize,
}

impl MacdState {
    pub fn new(config: &BenchmarkConfig) -> Result<Self> {
        config.validate()?;
        let (fast, slow, signal) = config.macd_periods();
        Ok(Self {
            fast: Ema::new(fast),
            slow: Ema::new(slow),
            signal: Ema::new(signal),
            prev_delta: None,
            observed: 0,
            warmup: slow,
        })
    }

    pub fn warmed_up(&self) -> bool {
        self.observed >= self.warmup
    }

    pub fn update(&mut self, price: f64) -> i8 {
        self.observed += 1;
        let macd = self.fast.update(price) - self.slow.update(price);
        let line = self.signal.update(macd);
        let delta = macd - line;
        let crossing = match self.prev_delta {
            Some(prev) if prev <= 0.0 && delta > 0.0 => 1,
            Some(prev) if prev >= 0.0 && delta < 0.0 => -1,
            _ => 0,
        };
        self.prev_delta = Some(delta);
        if self.observed < self.warmup {
            0
        } else {
            crossing
        }
    }
}

/// Batch form: the crossover signal at the last tick of `history`.
pub fn macd_signal(config: &BenchmarkConfig, history: &[f64]) -> Result<i8> {
    let mut state = MacdState::new(config)?;
    let needed = config.macd_periods().1;
    if history.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            got: history.len(),
        });
    }
    let mut out = 0;
    for &p in history {
        out = state.update(p);
    }
    Ok(out)
}

/// One scalper decision: take profit or cut losses on the open position, and
/// when flat, chase the direction of the last mid move. Exits (including the
/// hold cap) are the scalper's own; the ledger applies no summary rules to
/// instruction streams.
pub fn scalper_signal(
    config: &BenchmarkConfig,
    limits: &StrategyConfig,
    quote: &TickQuote,
    open_positions: &[TradePosition],
    prev_mid: Option<f64>,
) -> Vec<TradeInstruction> {
    let mut orders = Vec::new();
    for pos in open_positions {
        let exit = match pos.side {
            Side::Long => {
                quote.bid >= pos.open_price + config.take_profit
                    || quote.bid <= pos.open_price - config.stop_loss
            }
            Side::Short => {
                quote.ask <= pos.open_price - config.take_profit
                    || quote.ask >= pos.open_price + config.stop_loss
            }
        };
        if exit || pos.age(quote.index) > limits.max_hold {
            orders.push(TradeInstruction::Close { position_id: pos.id });
        }
    }
    if open_positions.is_empty() {
        if let Some(prev) = prev_mid {
            let mid = quote.mid();
            if mid > prev {
                orders.push(TradeInstruction::Open(Side::Long));
            } else if mid < prev {
                orders.push(TradeInstruction::Open(Side::Short));
            }
        }
    }
    orders
}
