//! End-to-end run pipeline: stream -> momenta -> signals -> evaluation ->
//! ledger, plus the benchmark strategies on the identical ledger path.
//!
//! A run has two phases. Phase one slides every parameter set's window over
//! the mid-price series and turns each momentum into a per-set signal; phase
//! two walks the ticks once, aggregating signals into summary commands,
//! periodically re-scoring the sets on their virtual trades, stepping the
//! account, and feeding closed long trades into the replica store.

use std::collections::{BTreeMap, VecDeque};

use crate::backtester::{
    Account, ExecutionEvent, ExecutionReport, NavPoint, Side, StepCommand, StrategyConfig,
};
use crate::error::{Error, Result};
use crate::evaluator::{
    select_optimal, sharpe_ratio, volatility_sharpe, ClosedTradeLedgerView, SharpeScore,
};
use crate::market_data::TickStream;
use crate::predictor::{
    aggregate, direction_hint, momentum_bin, MassHistogram, PredictorConfig, PredictorState,
};
use crate::replica::{
    spin_from_trade, spin_histograms, Replica, ReplicaSystem, ReplicaSystemConfig,
};
use crate::strategies::{gap_signal, scalper_signal, BenchmarkConfig, BenchmarkKind, MacdState};
use crate::string::{return_volatility, two_endpoint_maps, MomentumBank, RegularFunction, StringParams};

/// Which strategy a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// One fixed parameter set drives the trading directly.
    PmbcsSimple,
    /// Many parameter sets vote; periodic scoring tracks the best one.
    PmbcsSelfLearning,
    Scalper,
    Macd,
    Arima000C,
    Arima010,
    Arima010C,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::PmbcsSimple => "pmbcs_simple",
            ModelKind::PmbcsSelfLearning => "pmbcs_selflearning",
            ModelKind::Scalper => "scalper",
            ModelKind::Macd => "macd",
            ModelKind::Arima000C => "arima_000_c",
            ModelKind::Arima010 => "arima_010",
            ModelKind::Arima010C => "arima_010_c",
        }
    }

    pub fn is_pmbcs(self) -> bool {
        matches!(self, ModelKind::PmbcsSimple | ModelKind::PmbcsSelfLearning)
    }

    pub fn benchmark_kind(self) -> Option<BenchmarkKind> {
        match self {
            ModelKind::Scalper => Some(BenchmarkKind::Scalper),
            ModelKind::Macd => Some(BenchmarkKind::Macd),
            ModelKind::Arima000C => Some(BenchmarkKind::Arima000C),
            ModelKind::Arima010 => Some(BenchmarkKind::Arima010),
            ModelKind::Arima010C => Some(BenchmarkKind::Arima010C),
            _ => None,
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pmbcs_simple" => Ok(ModelKind::PmbcsSimple),
            "pmbcs_selflearning" => Ok(ModelKind::PmbcsSelfLearning),
            "scalper" => Ok(ModelKind::Scalper),
            "macd" => Ok(ModelKind::Macd),
            "arima_000_c" => Ok(ModelKind::Arima000C),
            "arima_010" => Ok(ModelKind::Arima010),
            "arima_010_c" => Ok(ModelKind::Arima010C),
            other => Err(Error::InvalidConfig(format!("unknown model {other:?}"))),
        }
    }
}

/// Cartesian parameter grid. Enumeration nests window length, then exponent,
/// then curve family, then frequency, then phase; `n_s` keeps the first that
/// many combinations.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub window_lens: Vec<usize>,
    pub exponents: Vec<f64>,
    pub funcs: Vec<RegularFunction>,
    pub frequencies: Vec<u32>,
    pub phases: Vec<f64>,
    pub n_s: Option<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            window_lens: vec![900],
            exponents: vec![8.0, 16.0, 24.0, 32.0],
            funcs: vec![RegularFunction::Cos],
            frequencies: vec![0, 1, 2, 3],
            phases: vec![0.0, 3.14],
            n_s: None,
        }
    }
}

impl GridSpec {
    pub fn total(&self) -> usize {
        self.window_lens.len()
            * self.exponents.len()
            * self.funcs.len()
            * self.frequencies.len()
            * self.phases.len()
    }

    pub fn enumerate(&self) -> Result<Vec<StringParams>> {
        let total = self.total();
        if total == 0 {
            return Err(Error::InvalidConfig("parameter grid has an empty axis".into()));
        }
        let take = match self.n_s {
            None => total,
            Some(0) => return Err(Error::InvalidConfig("n_s must be at least 1".into())),
            Some(k) if k > total => {
                return Err(Error::InvalidConfig(format!(
                    "n_s = {k} exceeds the {total} grid combinations"
                )));
            }
            Some(k) => k,
        };
        let mut sets = Vec::with_capacity(take);
        'fill: for &window_len in &self.window_lens {
            for &exponent in &self.exponents {
                for &func in &self.funcs {
                    for &frequency in &self.frequencies {
                        for &phase in &self.phases {
                            let params = StringParams {
                                window_len,
                                frequency,
                                exponent,
                                func,
                                phase,
                            };
                            params.validate()?;
                            sets.push(params);
                            if sets.len() == take {
                                break 'fill;
                            }
                        }
                    }
                }
            }
        }
        Ok(sets)
    }
}

/// Everything a run needs besides the stream.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub model: ModelKind,
    pub grid: GridSpec,
    pub strategy: StrategyConfig,
    pub benchmark: BenchmarkConfig,
    pub predictor: PredictorConfig,
    pub replica: ReplicaSystemConfig,
    /// Feed closed long trades into the replica store and record its votes.
    pub replica_enabled: bool,
    /// Exponent of the endpoint maps that build replica coordinates.
    pub replica_map_exponent: f64,
    /// Per-tick unit penalty in the excess-return reference.
    pub penalty: f64,
    /// Re-score the parameter sets every this many ticks.
    pub eval_interval: usize,
    /// Replace the score denominator with the trailing return volatility.
    pub use_return_volatility: bool,
    pub histogram_bins: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::PmbcsSelfLearning,
            grid: GridSpec::default(),
            strategy: StrategyConfig::default(),
            benchmark: BenchmarkConfig::default(),
            predictor: PredictorConfig::default(),
            replica: ReplicaSystemConfig::default(),
            replica_enabled: true,
            replica_map_exponent: 1.0,
            penalty: 1e-5,
            eval_interval: 500,
            use_return_volatility: false,
            histogram_bins: 50,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        self.strategy.validate()?;
        if !(self.penalty >= 0.0) || !self.penalty.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "penalty must be non-negative, got {}",
                self.penalty
            )));
        }
        if self.eval_interval == 0 {
            return Err(Error::InvalidConfig("eval_interval must be positive".into()));
        }
        if self.histogram_bins == 0 {
            return Err(Error::InvalidConfig("histogram_bins must be positive".into()));
        }
        if self.model.is_pmbcs() {
            self.predictor.validate()?;
            let sets = self.grid.enumerate()?;
            if self.model == ModelKind::PmbcsSimple && sets.len() != 1 {
                return Err(Error::InvalidConfig(format!(
                    "the simple model takes exactly one parameter set, grid yields {}",
                    sets.len()
                )));
            }
            if self.replica_enabled {
                self.replica.validate()?;
                if !(self.replica_map_exponent > 0.0) || !self.replica_map_exponent.is_finite() {
                    return Err(Error::InvalidConfig(format!(
                        "replica map exponent must be positive, got {}",
                        self.replica_map_exponent
                    )));
                }
            }
        } else {
            self.benchmark.validate()?;
            let expect = self.model.benchmark_kind().expect("non-pmbcs model");
            if self.benchmark.kind != expect {
                return Err(Error::InvalidConfig(format!(
                    "model {} needs benchmark kind {expect}, config says {}",
                    self.model, self.benchmark.kind
                )));
            }
        }
        Ok(())
    }
}

/// Streaming central-moment accumulator for the momentum skewness report.
#[derive(Debug, Clone, Copy, Default)]
struct MomentSketch {
    n: u64,
    mean: f64,
    m2: f64,
    m3: f64,
}

impl MomentSketch {
    fn push(&mut self, x: f64) {
        let n0 = self.n as f64;
        self.n += 1;
        let n1 = self.n as f64;
        let delta = x - self.mean;
        let delta_n = delta / n1;
        let term = delta * delta_n * n0;
        self.m3 += term * delta_n * (n1 - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term;
        self.mean += delta_n;
    }

    fn skewness(&self) -> Option<f64> {
        if self.n < 3 {
            return None;
        }
        let n = self.n as f64;
        let m2 = self.m2 / n;
        if m2 <= 0.0 {
            return None;
        }
        Some((self.m3 / n) / m2.powf(1.5))
    }
}

/// Signal-driven shadow position for one parameter set. It trades the set's
/// own signals under the shared close rules and records only the holding
/// times; scoring needs nothing else.
#[derive(Debug, Clone, Default)]
struct VirtualBook {
    open: Option<(u64, i8)>,
    durations: Vec<usize>,
}

impl VirtualBook {
    fn update(&mut self, tau: u64, signal: i8, max_hold: u64) {
        if let Some((open_tau, dir)) = self.open {
            let age = tau - open_tau;
            let against = signal != 0 && signal != dir;
            if against || age > max_hold {
                self.durations.push(age as usize);
                self.open = None;
            }
        }
        if self.open.is_none() && signal != 0 {
            self.open = Some((tau, signal));
        }
    }
}

/// Everything a finished run reports.
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// The enumerated parameter sets; empty for benchmark models.
    pub sets: Vec<StringParams>,
    pub nav: Vec<NavPoint>,
    pub reports: Vec<ExecutionReport>,
    pub account: Account,
    /// Final per-set scores; empty for benchmark models.
    pub scores: Vec<SharpeScore>,
    /// Set the selector favored at the end of the run.
    pub optimal_set: Option<usize>,
    pub momentum_incoming: MassHistogram,
    pub momentum_outgoing: MassHistogram,
    pub momentum_skewness: Option<f64>,
    /// Holding-interval distributions of winning / losing long trades.
    pub spin_plus: BTreeMap<u64, f64>,
    pub spin_minus: BTreeMap<u64, f64>,
    /// Replica-store votes recorded at long closes: (tick, fuzzy spin).
    pub fuzzy_spins: Vec<(u64, f64)>,
    /// Evaluation instants where the return volatility was unusable and the
    /// standard deviation stood in.
    pub sigma_r_fallbacks: u64,
}

impl RunOutput {
    pub fn final_nav(&self) -> f64 {
        self.nav
            .last()
            .map(|p| p.nav)
            .unwrap_or(crate::backtester::NAV_REFERENCE)
    }

    pub fn nav_pct(&self) -> f64 {
        (self.final_nav() - crate::backtester::NAV_REFERENCE) / crate::backtester::NAV_REFERENCE
            * 100.0
    }
}

/// Runs one configured model over one stream.
pub fn run(stream: &TickStream, config: &EngineConfig) -> Result<RunOutput> {
    config.validate()?;
    if config.model.is_pmbcs() {
        run_pmbcs(stream, config)
    } else {
        run_benchmark(stream, config)
    }
}

/// Scores every set on its virtual trades closed so far. In volatility mode
/// the denominator comes from the trailing price window of the set's own
/// length; when that window is unusable (too early, or the trend makes the
/// radicand negative) the standard deviation stands in and the fallback is
/// counted.
fn score_sets(
    sets: &[StringParams],
    virtuals: &[VirtualBook],
    config: &EngineConfig,
    mids: &[f64],
    t: usize,
    fallbacks: &mut u64,
) -> Result<Vec<SharpeScore>> {
    let mut out = Vec::with_capacity(sets.len());
    for (k, book) in virtuals.iter().enumerate() {
        let ledger = ClosedTradeLedgerView::from_durations(book.durations.iter().copied())?;
        let score = if config.use_return_volatility {
            let ls = sets[k].window_len;
            let sigma_r = if t >= ls {
                return_volatility(&mids[t - ls..=t], ls).ok()
            } else {
                None
            };
            match sigma_r {
                Some(s) => volatility_sharpe(&ledger, k, config.penalty, s)?,
                None => {
                    *fallbacks += 1;
                    sharpe_ratio(&ledger, k, config.penalty)?
                }
            }
        } else {
            sharpe_ratio(&ledger, k, config.penalty)?
        };
        out.push(score);
    }
    Ok(out)
}

fn run_pmbcs(stream: &TickStream, config: &EngineConfig) -> Result<RunOutput> {
    let quotes = stream.quotes();
    let mids = stream.mids();
    let n = mids.len();
    let sets = config.grid.enumerate()?;
    let n_s = sets.len();
    let bins = config.histogram_bins;

    // Phase one: momenta -> per-set signals, histogram and skew accumulation.
    let mut signals: Vec<Vec<i8>> = vec![vec![0i8; n]; n_s];
    let mut incoming = vec![0u64; bins];
    let mut outgoing = vec![0u64; bins];
    let mut sketch = MomentSketch::default();
    let mut predictors = sets
        .iter()
        .map(|p| PredictorState::new(*p, config.predictor))
        .collect::<Result<Vec<_>>>()?;
    let bank = MomentumBank::new(&sets)?;
    bank.run(&mids, |k, record| {
        let ls = sets[k].window_len;
        // The window starting at tau is complete at tick tau + l_s; that is
        // when its momentum can act.
        let t = record.tau as usize + ls;
        if !record.degenerate {
            // Clamp away any last-ulp excursion beyond 1 before binning.
            incoming[momentum_bin(record.value.clamp(0.0, 1.0), bins)?] += 1;
            sketch.push(record.value);
        }
        let hint = direction_hint(&mids, t, ls);
        let signal = predictors[k].update_and_signal(&record, hint)?;
        if signal != 0 {
            outgoing[momentum_bin(record.value.clamp(0.0, 1.0), bins)?] += 1;
            signals[k][t] = signal;
        }
        Ok(())
    })?;

    // Phase two: one pass over the ticks.
    let self_learning = config.model == ModelKind::PmbcsSelfLearning;
    let mut account = Account::new();
    let mut reports: Vec<ExecutionReport> = Vec::new();
    let mut nav = Vec::with_capacity(n);
    let mut virtuals = vec![VirtualBook::default(); n_s];
    let mut optimal: Option<usize> = None;
    let mut fallbacks = 0u64;
    let mut replica_system = if config.replica_enabled {
        Some(ReplicaSystem::new(config.replica)?)
    } else {
        None
    };
    let mut fuzzy_spins = Vec::new();
    let mut spin_trades: Vec<(u64, i8)> = Vec::new();
    let mut per_set = vec![0i8; n_s];

    for (t, quote) in quotes.iter().enumerate() {
        for k in 0..n_s {
            per_set[k] = signals[k][t];
            virtuals[k].update(t as u64, per_set[k], config.strategy.max_hold);
        }
        if self_learning && t > 0 && t % config.eval_interval == 0 {
            let scores = score_sets(&sets, &virtuals, config, &mids, t, &mut fallbacks)?;
            match select_optimal(&scores) {
                Ok(id) => optimal = Some(id),
                Err(Error::NoDefinedScore) => {}
                Err(e) => return Err(e),
            }
        }
        let command = aggregate(t as u64, &per_set, n_s)?;
        let (execs, nav_now) =
            account.step(quote, &StepCommand::Summary(command.summary), &config.strategy, optimal)?;

        for report in &execs {
            if report.event != ExecutionEvent::Close || report.side != Side::Long {
                continue;
            }
            let position = account
                .closed_positions()
                .iter()
                .rev()
                .find(|p| Some(p.id) == report.position_id)
                .expect("close report references a closed position");
            let open_tau = position.open_tau;
            spin_trades.push((
                report.tau - open_tau,
                spin_from_trade(report.price, position.open_price),
            ));
            if let Some(system) = replica_system.as_mut() {
                let h_op = system.config().h_op as u64;
                if open_tau < h_op {
                    continue;
                }
                let window = &mids[(open_tau - h_op) as usize..=open_tau as usize];
                let (p_map, x_map) = two_endpoint_maps(window, config.replica_map_exponent)?;
                let coords = vec![p_map, x_map];
                match system.fuzzy_spin(&coords) {
                    Ok(vote) => fuzzy_spins.push((report.tau, vote)),
                    Err(Error::EmptyReplicaStore) | Err(Error::ReplicaStoreTooShort { .. }) => {}
                    Err(e) => return Err(e),
                }
                let spin = spin_from_trade(report.price, position.open_price);
                system.push(Replica::new(coords, spin)?)?;
            }
        }

        reports.extend(execs);
        nav.push(NavPoint {
            tau: quote.index,
            timestamp: quote.timestamp,
            nav: nav_now,
        });
    }

    // Final scores: the self-learning model reports its virtual books, the
    // simple model its real closed trades.
    let scores = if self_learning {
        score_sets(&sets, &virtuals, config, &mids, n - 1, &mut fallbacks)?
    } else {
        let durations = account
            .closed_positions()
            .iter()
            .map(|p| (p.close_tau.expect("closed") - p.open_tau) as usize);
        let ledger = ClosedTradeLedgerView::from_durations(durations)?;
        vec![sharpe_ratio(&ledger, 0, config.penalty)?]
    };
    if self_learning {
        match select_optimal(&scores) {
            Ok(id) => optimal = Some(id),
            Err(Error::NoDefinedScore) => {}
            Err(e) => return Err(e),
        }
    }

    let (spin_plus, spin_minus) = spin_histograms(&spin_trades);
    Ok(RunOutput {
        sets,
        nav,
        reports,
        account,
        scores,
        optimal_set: optimal,
        momentum_incoming: MassHistogram::from_counts(&incoming)?,
        momentum_outgoing: MassHistogram::from_counts(&outgoing)?,
        momentum_skewness: sketch.skewness(),
        spin_plus,
        spin_minus,
        fuzzy_spins,
        sigma_r_fallbacks: fallbacks,
    })
}

fn run_benchmark(stream: &TickStream, config: &EngineConfig) -> Result<RunOutput> {
    let quotes = stream.quotes();
    let kind = config.model.benchmark_kind().expect("benchmark model");
    let mut account = Account::new();
    let mut reports: Vec<ExecutionReport> = Vec::new();
    let mut nav = Vec::with_capacity(quotes.len());

    let mut macd = match kind {
        BenchmarkKind::Macd => Some(MacdState::new(&config.benchmark)?),
        _ => None,
    };
    let mut rolling: VecDeque<f64> = VecDeque::new();
    let mut rolling_sum = 0.0;
    let mut prev_mid: Option<f64> = None;

    for quote in quotes {
        let mid = quote.mid();
        let command = match kind {
            BenchmarkKind::Scalper => StepCommand::Instructions(scalper_signal(
                &config.benchmark,
                &config.strategy,
                quote,
                account.open_positions(),
                prev_mid,
            )),
            BenchmarkKind::Macd => {
                let signal = macd.as_mut().expect("macd state").update(mid);
                StepCommand::Summary(signal as f64)
            }
            BenchmarkKind::Arima010 => {
                // Forecast = the last observed price = this mid; the gap is
                // identically zero and the model never trades.
                StepCommand::Summary(gap_signal(mid - mid, config.benchmark.dead_band) as f64)
            }
            BenchmarkKind::Arima010C => StepCommand::Summary(gap_signal(
                (mid + config.benchmark.c) - mid,
                config.benchmark.dead_band,
            ) as f64),
            BenchmarkKind::Arima000C => {
                rolling.push_back(mid);
                rolling_sum += mid;
                if rolling.len() > config.benchmark.mean_window {
                    rolling_sum -= rolling.pop_front().expect("nonempty window");
                }
                let forecast = rolling_sum / rolling.len() as f64 + config.benchmark.c;
                StepCommand::Summary(gap_signal(forecast - mid, config.benchmark.dead_band) as f64)
            }
        };
        let (execs, nav_now) = account.step(quote, &command, &config.strategy, None)?;
        reports.extend(execs);
        nav.push(NavPoint {
            tau: quote.index,
            timestamp: quote.timestamp,
            nav: nav_now,
        });
        prev_mid = Some(mid);
    }

    let bins = config.histogram_bins;
    Ok(RunOutput {
        sets: Vec::new(),
        nav,
        reports,
        account,
        scores: Vec::new(),
        optimal_set: None,
        momentum_incoming: MassHistogram::from_counts(&vec![0; bins])?,
        momentum_outgoing: MassHistogram::from_counts(&vec![0; bins])?,
        momentum_skewness: None,
        spin_plus: BTreeMap::new(),
        spin_minus: BTreeMap::new(),
        fuzzy_spins: Vec::new(),
        sigma_r_fallbacks: 0,
    })
}
