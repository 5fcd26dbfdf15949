//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A triple file line did not match the `head\trelation\ttail` contract.
    #[error("parse error at {path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    /// Invalid configuration value (bad fraction, zero iterations, ...).
    #[error("config error: {0}")]
    Config(String),

    /// Input data is inconsistent with what an operation needs.
    #[error("data error: {0}")]
    Data(String),

    /// Matrix/vector dimensions do not line up.
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: String, got: String },

    /// A matrix with a zero column where cosines are required.
    #[error("degenerate matrix: {0}")]
    Degenerate(String),

    /// Cosine of a zero-norm feature row is undefined; reported, never silently 0.
    #[error("similarity undefined: entity '{0}' has a zero feature vector")]
    UndefinedSimilarity(String),

    /// The exponential-cost oracle refuses graphs beyond its walk budget.
    #[error("oracle scale exceeded: ~{estimated} walks > limit {limit}")]
    OracleScale { estimated: u64, limit: u64 },

    /// Numeric breakdown during optimization (NaN loss, divergence).
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
