use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum DbdError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite coordinate at position {0}")]
    NonFinite(usize),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("point {0} was not reached by the search")]
    NotReached(usize),

    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, DbdError>;

pub(crate) fn invalid(msg: impl Into<String>) -> DbdError {
    DbdError::InvalidInput(msg.into())
}
