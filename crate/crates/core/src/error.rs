//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by phase-space evaluation, integration, training and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{system}: singularity at radius {radius:.3e}")]
    Singularity { system: String, radius: f64 },

    #[error(
        "fixed-point iteration did not converge within {max_iter} iterations \
         (last change {last_change:.3e})"
    )]
    NoConvergence { max_iter: usize, last_change: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("model format: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
