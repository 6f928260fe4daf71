use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed textual or JSON input.
    #[error("parse error: {0}")]
    Parse(String),
    /// Structurally invalid argument (bad vertex id, empty set, ...).
    #[error("invalid input: {0}")]
    Invalid(String),
    /// A documented precondition of an operation does not hold.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    /// A constant does not fit in 64 bits.
    #[error("arithmetic overflow computing {0}")]
    Overflow(String),
    /// A bounded search ran out of its work budget.
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
