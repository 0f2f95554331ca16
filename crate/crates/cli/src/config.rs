//! TOML run configuration: a serde mirror of the engine's config structs
//! plus the stream source and output knobs. Every field has a default, so
//! an empty file is a valid self-learning run on synthetic data.

use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use strmom_core::backtester::StrategyConfig;
use strmom_core::engine::{EngineConfig, GridSpec, ModelKind};
use strmom_core::error::{Error, Result};
use strmom_core::market_data::{
    generate_synthetic, load_ticks, SyntheticModel, SyntheticParams, TickStream,
};
use strmom_core::predictor::PredictorConfig;
use strmom_core::replica::ReplicaSystemConfig;
use strmom_core::strategies::BenchmarkConfig;
use strmom_core::string::RegularFunction;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    /// pmbcs_simple | pmbcs_selflearning | scalper | macd | arima_000_c |
    /// arima_010 | arima_010_c
    pub model: String,
    /// Seed for synthetic generation; `--seed` on the command line wins.
    pub seed: u64,
    pub stream: StreamSection,
    pub grid: GridSection,
    pub strategy: StrategySection,
    pub evaluator: EvaluatorSection,
    pub predictor: PredictorSection,
    pub replica: ReplicaSection,
    pub benchmark: BenchmarkSection,
    pub report: ReportSection,
}

impl Default for FileConfig {
    fn default() -> Self {
        Self {
            model: "pmbcs_selflearning".into(),
            seed: 42,
            stream: StreamSection::default(),
            grid: GridSection::default(),
            strategy: StrategySection::default(),
            evaluator: EvaluatorSection::default(),
            predictor: PredictorSection::default(),
            replica: ReplicaSection::default(),
            benchmark: BenchmarkSection::default(),
            report: ReportSection::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StreamSection {
    /// "synthetic" or "file".
    pub kind: String,
    /// Tick CSV path, required when kind = "file".
    pub path: Option<String>,
    /// Synthetic generator: random_walk | random_walk_drift | sinusoid.
    pub model: String,
    pub ticks: usize,
    pub start: f64,
    pub volatility: f64,
    pub drift: f64,
    pub amplitude: f64,
    pub period: f64,
    pub spread: f64,
    pub interval_ms: u64,
    pub instrument: String,
}

impl Default for StreamSection {
    fn default() -> Self {
        let p = SyntheticParams::default();
        Self {
            kind: "synthetic".into(),
            path: None,
            model: "random_walk".into(),
            ticks: 100_000,
            start: p.start,
            volatility: p.volatility,
            drift: p.drift,
            amplitude: p.amplitude,
            period: p.period,
            spread: p.spread,
            interval_ms: p.interval_ms,
            instrument: p.instrument,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub window_lens: Vec<usize>,
    pub exponents: Vec<f64>,
    pub funcs: Vec<String>,
    pub frequencies: Vec<u32>,
    pub phases: Vec<f64>,
    /// Keep only the first n_s grid combinations when set.
    pub n_s: Option<usize>,
}

impl Default for GridSection {
    fn default() -> Self {
        let g = GridSpec::default();
        Self {
            window_lens: g.window_lens,
            exponents: g.exponents,
            funcs: g.funcs.iter().map(|f| f.to_string()).collect(),
            frequencies: g.frequencies,
            phases: g.phases,
            n_s: g.n_s,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategySection {
    pub max_open: usize,
    pub opens_per_hour: usize,
    pub altitude: f64,
    pub units: f64,
    pub max_hold: u64,
}

impl Default for StrategySection {
    fn default() -> Self {
        let s = StrategyConfig::default();
        Self {
            max_open: s.max_open,
            opens_per_hour: s.opens_per_hour,
            altitude: s.altitude,
            units: s.units,
            max_hold: s.max_hold,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluatorSection {
    /// Per-tick unit penalty in the excess-return reference.
    pub penalty: f64,
    /// Re-score the parameter sets every this many ticks.
    pub eval_interval: usize,
    /// Use the trailing return volatility as the score denominator.
    pub use_return_volatility: bool,
}

impl Default for EvaluatorSection {
    fn default() -> Self {
        let e = EngineConfig::default();
        Self {
            penalty: e.penalty,
            eval_interval: e.eval_interval,
            use_return_volatility: e.use_return_volatility,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictorSection {
    pub warmup: usize,
    pub band_window: usize,
    pub band_refresh: usize,
    pub initial_band: (f64, f64),
    pub band_quantiles: (f64, f64),
}

impl Default for PredictorSection {
    fn default() -> Self {
        let p = PredictorConfig::default();
        Self {
            warmup: p.warmup,
            band_window: p.band_window,
            band_refresh: p.band_refresh,
            initial_band: p.initial_band,
            band_quantiles: p.band_quantiles,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplicaSection {
    pub enabled: bool,
    pub capacity: usize,
    pub h_op: usize,
    pub h_cl: usize,
    pub exponent: f64,
    pub weighting: f64,
    /// Exponent of the endpoint maps that build replica coordinates.
    pub map_exponent: f64,
}

impl Default for ReplicaSection {
    fn default() -> Self {
        let r = ReplicaSystemConfig::default();
        let e = EngineConfig::default();
        Self {
            enabled: e.replica_enabled,
            capacity: r.capacity,
            h_op: r.h_op,
            h_cl: r.h_cl,
            exponent: r.exponent,
            weighting: r.weighting,
            map_exponent: e.replica_map_exponent,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkSection {
    pub c: f64,
    pub macd_fast: usize,
    pub macd_slow: usize,
    pub macd_signal: usize,
    pub macd_scale: usize,
    pub take_profit: f64,
    pub stop_loss: f64,
    pub mean_window: usize,
    pub dead_band: f64,
}

impl Default for BenchmarkSection {
    fn default() -> Self {
        let b = BenchmarkConfig::default();
        Self {
            c: b.c,
            macd_fast: b.macd_fast,
            macd_slow: b.macd_slow,
            macd_signal: b.macd_signal,
            macd_scale: b.macd_scale,
            take_profit: b.take_profit,
            stop_loss: b.stop_loss,
            mean_window: b.mean_window,
            dead_band: b.dead_band,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    /// Output directory; `--out` on the command line wins.
    pub out_dir: String,
    pub histogram_bins: usize,
    /// Bin width of the quote-spread histogram, in price units.
    pub spread_bin_width: f64,
}

impl Default for ReportSection {
    fn default() -> Self {
        Self {
            out_dir: "out".into(),
            histogram_bins: EngineConfig::default().histogram_bins,
            spread_bin_width: 1e-5,
        }
    }
}

pub fn parse_file(text: &str) -> Result<FileConfig> {
    toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("config parse: {e}")))
}

pub fn synthetic_model(name: &str) -> Result<SyntheticModel> {
    match name {
        "random_walk" => Ok(SyntheticModel::RandomWalk),
        "random_walk_drift" => Ok(SyntheticModel::RandomWalkDrift),
        "sinusoid" => Ok(SyntheticModel::Sinusoid),
        other => Err(Error::InvalidConfig(format!(
            "unknown synthetic model {other:?}; expected random_walk, random_walk_drift or sinusoid"
        ))),
    }
}

impl FileConfig {
    /// Assembles the engine configuration, including the benchmark kind
    /// implied by the model. Validation happens inside the engine.
    pub fn engine_config(&self) -> Result<EngineConfig> {
        let model = ModelKind::from_str(&self.model)?;
        let funcs: Vec<RegularFunction> = self
            .grid
            .funcs
            .iter()
            .map(|s| RegularFunction::from_str(s))
            .collect::<Result<_>>()?;
        let mut benchmark = BenchmarkConfig {
            c: self.benchmark.c,
            macd_fast: self.benchmark.macd_fast,
            macd_slow: self.benchmark.macd_slow,
            macd_signal: self.benchmark.macd_signal,
            macd_scale: self.benchmark.macd_scale,
            take_profit: self.benchmark.take_profit,
            stop_loss: self.benchmark.stop_loss,
            mean_window: self.benchmark.mean_window,
            dead_band: self.benchmark.dead_band,
            ..BenchmarkConfig::default()
        };
        if let Some(kind) = model.benchmark_kind() {
            benchmark.kind = kind;
        }
        Ok(EngineConfig {
            model,
            grid: GridSpec {
                window_lens: self.grid.window_lens.clone(),
                exponents: self.grid.exponents.clone(),
                funcs,
                frequencies: self.grid.frequencies.clone(),
                phases: self.grid.phases.clone(),
                n_s: self.grid.n_s,
            },
            strategy: StrategyConfig {
                max_open: self.strategy.max_open,
                opens_per_hour: self.strategy.opens_per_hour,
                altitude: self.strategy.altitude,
                units: self.strategy.units,
                max_hold: self.strategy.max_hold,
            },
            benchmark,
            predictor: PredictorConfig {
                warmup: self.predictor.warmup,
                band_window: self.predictor.band_window,
                band_refresh: self.predictor.band_refresh,
                initial_band: self.predictor.initial_band,
                band_quantiles: self.predictor.band_quantiles,
            },
            replica: ReplicaSystemConfig {
                capacity: self.replica.capacity,
                h_op: self.replica.h_op,
                h_cl: self.replica.h_cl,
                exponent: self.replica.exponent,
                weighting: self.replica.weighting,
                ..ReplicaSystemConfig::default()
            },
            replica_enabled: self.replica.enabled,
            replica_map_exponent: self.replica.map_exponent,
            penalty: self.evaluator.penalty,
            eval_interval: self.evaluator.eval_interval,
            use_return_volatility: self.evaluator.use_return_volatility,
            histogram_bins: self.report.histogram_bins,
        })
    }

    /// Loads or generates the tick stream this config points at.
    pub fn build_stream(&self) -> Result<TickStream> {
        match self.stream.kind.as_str() {
            "file" => {
                let path = self.stream.path.as_deref().ok_or_else(|| {
                    Error::InvalidConfig("stream.kind = \"file\" needs stream.path".into())
                })?;
                load_ticks(Path::new(path))
            }
            "synthetic" => {
                let model = synthetic_model(&self.stream.model)?;
                let params = SyntheticParams {
                    start: self.stream.start,
                    volatility: self.stream.volatility,
                    drift: self.stream.drift,
                    amplitude: self.stream.amplitude,
                    period: self.stream.period,
                    spread: self.stream.spread,
                    interval_ms: self.stream.interval_ms,
                    instrument: self.stream.instrument.clone(),
                };
                generate_synthetic(self.seed, self.stream.ticks, model, &params)
            }
            other => Err(Error::InvalidConfig(format!(
                "unknown stream.kind {other:?}; expected \"file\" or \"synthetic\""
            ))),
        }
    }
}
