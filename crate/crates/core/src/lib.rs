//! Deterministic tick-data backtesting and forecasting library built around
//! string-momentum signals.
//!
//! The crate is organized bottom-up: [`market_data`] loads or synthesizes
//! bid/ask tick streams, [`string`] computes momentum and related maps over
//! sliding price windows, [`predictor`] turns momenta into per-set trade
//! signals, [`evaluator`] scores parameter sets, [`backtester`] keeps the
//! spread-aware ledger, [`strategies`] provides baseline strategies that run
//! through the same ledger, [`replica`] implements the spin store and fuzzy
//! prediction, and [`engine`] wires everything into a reproducible run.

pub mod error;

pub use error::{Error, Result};

pub mod backtester;
pub mod engine;
pub mod evaluator;
pub mod market_data;
pub mod predictor;
pub mod replica;
pub mod report;
pub mod strategies;
pub mod string;
