//! Error type shared across the library.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },

    #[error("bid >= ask at row {row} (bid {bid}, ask {ask})")]
    CrossedQuote { row: usize, bid: f64, ask: f64 },

    #[error("tick stream is empty")]
    EmptyStream,

    #[error("invalid generator parameters: {0}")]
    InvalidGenerator(String),

    #[error("window length mismatch: expected {expected} prices, got {got}")]
    WindowLength { expected: usize, got: usize },

    #[error("invalid string parameters: {0}")]
    InvalidParams(String),

    #[error("offset {h} outside window 0..={window_len}")]
    OffsetOutOfRange { h: usize, window_len: usize },

    #[error("non-positive price in window: {value} at offset {h}")]
    NonPositivePrice { h: usize, value: f64 },

    #[error("volatility radicand {radicand} below tolerance")]
    NegativeRadicand { radicand: f64 },

    #[error("momentum record params do not match predictor params")]
    ParamsMismatch,

    #[error("expected {expected} per-set values, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("per-set value {value} at position {index} is not in {{-1, 0, +1}}")]
    InvalidSignal { index: usize, value: i8 },

    #[error("invalid histogram request: {0}")]
    InvalidHistogram(String),

    #[error("penalty must be non-negative, got {0}")]
    InvalidPenalty(f64),

    #[error("negative volatility denominator: {0}")]
    InvalidVolatility(f64),

    #[error("need at least {needed} values, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("zero variance: skewness undefined")]
    ZeroVariance,

    #[error("no defined score to select from")]
    NoDefinedScore,

    #[error("quote at index {index} arrives out of order (last {last})")]
    OutOfOrderQuote { index: u64, last: u64 },

    #[error("invalid strategy configuration: {0}")]
    InvalidStrategy(String),

    #[error("invalid spread {0}: must be non-negative")]
    InvalidSpread(f64),

    #[error("unknown position id {0}")]
    UnknownPosition(u64),

    #[error("invalid benchmark configuration: {0}")]
    InvalidBenchmark(String),

    #[error("replica shape mismatch: {0}")]
    ReplicaShape(String),

    #[error("replica store is empty")]
    EmptyReplicaStore,

    #[error("replica store too short for prediction: need h_cl - h_op = {span} older entries, have top index {top}")]
    ReplicaStoreTooShort { span: usize, top: usize },

    #[error("distance exponent must be >= 1, got {0}")]
    InvalidExponent(f64),

    #[error("invalid replica configuration: {0}")]
    InvalidReplica(String),

    #[error("invalid engine configuration: {0}")]
    InvalidConfig(String),

    #[error("command sequence length {commands} does not match stream length {ticks}")]
    CommandLength { commands: usize, ticks: usize },
}
