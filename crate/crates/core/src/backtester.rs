//! Spread-aware position ledger and the per-tick trading step.
//!
//! Fills always pay the spread: buys execute at the ask, sells at the bid.
//! Open positions are marked at the price they would close at right now, so
//! NAV already carries the exit cost of everything on the book.

use std::collections::VecDeque;

use chrono::{DateTime, Duration, Utc};

use crate::error::{Error, Result};
use crate::market_data::{TickQuote, TickStream};

/// NAV baseline all runs start from.
pub const NAV_REFERENCE: f64 = 1.0e5;

/// Rolling window for the open-rate cap.
const RATE_WINDOW_SECS: i64 = 3600;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Long,
    Short,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Long => 1.0,
            Side::Short => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Long => "long",
            Side::Short => "short",
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One position, open or closed. Longs open at the ask and close at the bid;
/// shorts the other way round.
#[derive(Debug, Clone, PartialEq)]
pub struct TradePosition {
    pub id: u64,
    pub side: Side,
    pub units: f64,
    /// Parameter set credited with the open, when one was selected.
    pub set_id: Option<usize>,
    pub open_tau: u64,
    pub open_time: DateTime<Utc>,
    pub open_price: f64,
    pub close_tau: Option<u64>,
    pub close_time: Option<DateTime<Utc>>,
    pub close_price: Option<f64>,
    pub realized: Option<f64>,
}

impl TradePosition {
    pub fn is_open(&self) -> bool {
        self.close_tau.is_none()
    }

    /// Ticks elapsed since the open at quote index `tau`.
    pub fn age(&self, tau: u64) -> u64 {
        tau.saturating_sub(self.open_tau)
    }

    /// PnL if the position were closed against `quote` right now.
    pub fn mark(&self, quote: &TickQuote) -> f64 {
        match self.side {
            Side::Long => (quote.bid - self.open_price) * self.units,
            Side::Short => (self.open_price - quote.ask) * self.units,
        }
    }

    fn exit_price(&self, quote: &TickQuote) -> f64 {
        match self.side {
            Side::Long => quote.bid,
            Side::Short => quote.ask,
        }
    }
}

/// Risk and sizing limits shared by every strategy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyConfig {
    /// Cap on simultaneously open positions.
    pub max_open: usize,
    /// Cap on opens inside any rolling hour.
    pub opens_per_hour: usize,
    /// Minimum |summary signal| required to open.
    pub altitude: f64,
    /// Lot size per position.
    pub units: f64,
    /// Force-close positions older than this many ticks.
    pub max_hold: u64,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self {
            max_open: 10,
            opens_per_hour: 10,
            altitude: 0.25,
            units: 1000.0,
            max_hold: 1800,
        }
    }
}

impl StrategyConfig {
    /// Default limits with the hold cap tied to a signal window: positions
    /// live at most two windows.
    pub fn for_window(window_len: usize) -> Self {
        Self {
            max_hold: 2 * window_len as u64,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_open == 0 {
            return Err(Error::InvalidStrategy("max_open must be at least 1".into()));
        }
        if self.opens_per_hour == 0 {
            return Err(Error::InvalidStrategy("opens_per_hour must be at least 1".into()));
        }
        if !self.altitude.is_finite() || self.altitude <= 0.0 || self.altitude > 1.0 {
            return Err(Error::InvalidStrategy(format!(
                "altitude must lie in (0, 1], got {}",
                self.altitude
            )));
        }
        if !self.units.is_finite() || self.units <= 0.0 {
            return Err(Error::InvalidStrategy(format!("units must be positive, got {}", self.units)));
        }
        if self.max_hold == 0 {
            return Err(Error::InvalidStrategy("max_hold must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExecutionEvent {
    Open,
    Close,
    /// An open was requested but the rolling-hour cap was already spent.
    RateLimited,
}

impl ExecutionEvent {
    pub fn as_str(self) -> &'static str {
        match self {
            ExecutionEvent::Open => "open",
            ExecutionEvent::Close => "close",
            ExecutionEvent::RateLimited => "rate_limited",
        }
    }
}

/// One line of the execution log.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionReport {
    pub tau: u64,
    pub timestamp: DateTime<Utc>,
    pub event: ExecutionEvent,
    pub side: Side,
    pub units: f64,
    /// Fill price; for rate-limited requests, the price the fill would have
    /// taken.
    pub price: f64,
    /// Realized PnL, only on closes.
    pub pnl: Option<f64>,
    pub set_id: Option<usize>,
    pub position_id: Option<u64>,
}

/// Explicit order from a strategy that manages its own exits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TradeInstruction {
    Open(Side),
    Close { position_id: u64 },
}

/// Per-tick input to [`Account::step`]. Summary-driven strategies hand over a
/// signal in [-1, 1] and let the ledger apply the shared open/close rules;
/// instruction-driven strategies submit explicit orders and only the risk
/// caps apply.
#[derive(Debug, Clone, PartialEq)]
pub enum StepCommand {
    Summary(f64),
    Instructions(Vec<TradeInstruction>),
}

impl StepCommand {
    /// A command that neither opens nor closes anything.
    pub fn hold() -> Self {
        StepCommand::Summary(0.0)
    }
}

/// The ledger: open book, closed history, realized PnL and the rate-cap
/// window.
#[derive(Debug, Clone)]
pub struct Account {
    pub reference: f64,
    pub realized_sum: f64,
    open: Vec<TradePosition>,
    closed: Vec<TradePosition>,
    open_times: VecDeque<DateTime<Utc>>,
    last_index: Option<u64>,
    next_id: u64,
}

impl Default for Account {
    fn default() -> Self {
        Self::new()
    }
}

impl Account {
    pub fn new() -> Self {
        Self {
            reference: NAV_REFERENCE,
            realized_sum: 0.0,
            open: Vec::new(),
            closed: Vec::new(),
            open_times: VecDeque::new(),
            last_index: None,
            next_id: 0,
        }
    }

    pub fn open_positions(&self) -> &[TradePosition] {
        &self.open
    }

    pub fn closed_positions(&self) -> &[TradePosition] {
        &self.closed
    }

    /// Unrealized PnL of the open book against `quote`.
    pub fn unrealized(&self, quote: &TickQuote) -> f64 {
        self.open.iter().map(|p| p.mark(quote)).sum()
    }

    /// Net asset value: reference + realized + marked open book. Recomputed
    /// from scratch so it cannot drift from the ledger.
    pub fn nav(&self, quote: &TickQuote) -> f64 {
        self.reference + self.realized_sum + self.unrealized(quote)
    }

    fn close_position(
        &mut self,
        slot: usize,
        quote: &TickQuote,
        reports: &mut Vec<ExecutionReport>,
    ) {
        let mut pos = self.open.remove(slot);
        let price = pos.exit_price(quote);
        let pnl = pos.mark(quote);
        pos.close_tau = Some(quote.index);
        pos.close_time = Some(quote.timestamp);
        pos.close_price = Some(price);
        pos.realized = Some(pnl);
        self.realized_sum += pnl;
        reports.push(ExecutionReport {
            tau: quote.index,
            timestamp: quote.timestamp,
            event: ExecutionEvent::Close,
            side: pos.side,
            units: pos.units,
            price,
            pnl: Some(pnl),
            set_id: pos.set_id,
            position_id: Some(pos.id),
        });
        self.closed.push(pos);
    }

    /// Opens in the rolling hour ending at `now`.
    fn recent_opens(&mut self, now: DateTime<Utc>) -> usize {
        let cutoff = now - Duration::seconds(RATE_WINDOW_SECS);
        while matches!(self.open_times.front(), Some(&t) if t <= cutoff) {
            self.open_times.pop_front();
        }
        self.open_times.len()
    }

    fn try_open(
        &mut self,
        side: Side,
        quote: &TickQuote,
        cfg: &StrategyConfig,
        set_id: Option<usize>,
        reports: &mut Vec<ExecutionReport>,
    ) {
        let price = match side {
            Side::Long => quote.ask,
            Side::Short => quote.bid,
        };
        // The rate cap is checked before the book cap so an exhausted hourly
        // budget is always reported, even when the book is full too.
        if self.recent_opens(quote.timestamp) >= cfg.opens_per_hour {
            reports.push(ExecutionReport {
                tau: quote.index,
                timestamp: quote.timestamp,
                event: ExecutionEvent::RateLimited,
                side,
                units: cfg.units,
                price,
                pnl: None,
                set_id,
                position_id: None,
            });
            return;
        }
        if self.open.len() >= cfg.max_open {
            return;
        }
        self.open_times.push_back(quote.timestamp);
        let id = self.next_id;
        self.next_id += 1;
        self.open.push(TradePosition {
            id,
            side,
            units: cfg.units,
            set_id,
            open_tau: quote.index,
            open_time: quote.timestamp,
            open_price: price,
            close_tau: None,
            close_time: None,
            close_price: None,
            realized: None,
        });
        reports.push(ExecutionReport {
            tau: quote.index,
            timestamp: quote.timestamp,
            event: ExecutionEvent::Open,
            side,
            units: cfg.units,
            price,
            pnl: None,
            set_id,
            position_id: Some(id),
        });
    }

    /// Advances the ledger by one tick: closes first, then opens, then the
    /// NAV mark. Returns the executions of this tick and the post-step NAV.
    pub fn step(
        &mut self,
        quote: &TickQuote,
        command: &StepCommand,
        cfg: &StrategyConfig,
        set_id: Option<usize>,
    ) -> Result<(Vec<ExecutionReport>, f64)> {
        cfg.validate()?;
        if let Some(last) = self.last_index {
            if quote.index <= last {
                return Err(Error::OutOfOrderQuote {
                    index: quote.index,
                    last,
                });
            }
        }
        self.last_index = Some(quote.index);

        let mut reports = Vec::new();
        match command {
            StepCommand::Summary(summary) => {
                if !summary.is_finite() || summary.abs() > 1.0 {
                    return Err(Error::InvalidParams(format!(
                        "summary signal must lie in [-1, 1], got {summary}"
                    )));
                }
                // Exits: a summary against the position, or the hold cap.
                let mut slot = 0;
                while slot < self.open.len() {
                    let pos = &self.open[slot];
                    let against = match pos.side {
                        Side::Long => *summary < 0.0,
                        Side::Short => *summary > 0.0,
                    };
                    if against || pos.age(quote.index) > cfg.max_hold {
                        self.close_position(slot, quote, &mut reports);
                    } else {
                        slot += 1;
                    }
                }
                if summary.abs() >= cfg.altitude {
                    let side = if *summary > 0.0 { Side::Long } else { Side::Short };
                    self.try_open(side, quote, cfg, set_id, &mut reports);
                }
            }
            StepCommand::Instructions(orders) => {
                for order in orders {
                    match order {
                        TradeInstruction::Close { position_id } => {
                            let slot = self
                                .open
                                .iter()
                                .position(|p| p.id == *position_id)
                                .ok_or(Error::UnknownPosition(*position_id))?;
                            self.close_position(slot, quote, &mut reports);
                        }
                        TradeInstruction::Open(side) => {
                            self.try_open(*side, quote, cfg, set_id, &mut reports);
                        }
                    }
                }
            }
        }

        Ok((reports, self.nav(quote)))
    }
}

/// One NAV sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavPoint {
    pub tau: u64,
    pub timestamp: DateTime<Utc>,
    pub nav: f64,
}

/// Result of replaying a full command sequence.
#[derive(Debug, Clone)]
pub struct BacktestResult {
    pub account: Account,
    pub reports: Vec<ExecutionReport>,
    pub nav_series: Vec<NavPoint>,
}

impl BacktestResult {
    pub fn final_nav(&self) -> f64 {
        self.nav_series.last().map(|p| p.nav).unwrap_or(NAV_REFERENCE)
    }

    /// Percent change of the final NAV against the reference.
    pub fn nav_pct(&self) -> f64 {
        (self.final_nav() - NAV_REFERENCE) / NAV_REFERENCE * 100.0
    }
}

/// Replays one command per tick over a stream.
pub fn run_commands(
    stream: &TickStream,
    commands: &[StepCommand],
    cfg: &StrategyConfig,
    set_id: Option<usize>,
) -> Result<BacktestResult> {
    if commands.len() != stream.len() {
        return Err(Error::CommandLength {
            commands: commands.len(),
            ticks: stream.len(),
        });
    }
    let mut account = Account::new();
    let mut reports = Vec::new();
    let mut nav_series = Vec::with_capacity(stream.len());
    for (quote, command) in stream.quotes().iter().zip(commands) {
        let (mut execs, nav) = account.step(quote, command, cfg, set_id)?;
        reports.append(&mut execs);
        nav_series.push(NavPoint {
            tau: quote.index,
            timestamp: quote.timestamp,
            nav,
        });
    }
    Ok(BacktestResult {
        account,
        reports,
        nav_series,
    })
}

/// Final NAV of the same command sequence under different spreads. The mid
/// is preserved, so only execution prices move; wider spreads can only cost.
pub fn spread_sweep(
    stream: &TickStream,
    commands: &[StepCommand],
    cfg: &StrategyConfig,
    spreads: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(spreads.len());
    for &spread in spreads {
        let widened = stream.respread(spread)?;
        let result = run_commands(&widened, commands, cfg, None)?;
        out.push((spread, result.final_nav()));
    }
    Ok(out)
}
