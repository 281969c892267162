use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("interaction network is empty")]
    EmptyNetwork,

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("invalid split fractions: {0}")]
    InvalidSplit(String),

    #[error("out-of-order interaction: timestamp {timestamp} precedes recorded {last}")]
    OutOfOrder { timestamp: f64, last: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unknown node: {0}")]
    UnknownNode(String),

    #[error("degenerate zero-norm vector for node {0}")]
    DegenerateVector(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("batch schedule violation: {0}")]
    ScheduleViolation(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("negative time interval: {0}")]
    NegativeInterval(f64),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
