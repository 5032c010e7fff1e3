use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal {off:e})")]
    NonConvergence { sweeps: usize, off: f64 },

    #[error("node {0} has zero variance")]
    ZeroVariance(usize),

    #[error("kernel of {required} entries exceeds memory cap of {cap} (N*T cap)")]
    MemoryBudgetExceeded { required: usize, cap: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("cache does not match the layer or upstream gradient: {0}")]
    CacheMismatch(String),

    #[error("support has negative entry {value} at ({row}, {col})")]
    NegativeSupport { row: usize, col: usize, value: f64 },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("signal of length {length} too short for window {window} + horizon {horizon}")]
    TooShort {
        length: usize,
        window: usize,
        horizon: usize,
    },

    #[error("trajectory diverged at step {step}")]
    Divergence { step: usize },

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("ragged rows: row {row} has {found} fields, expected {expected}")]
    RaggedRows { row: usize, expected: usize, found: usize },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimMismatch(msg.into())
    }
}
