use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain {0:?}: {1}")]
    InvalidDomain(String, &'static str),

    /// A numeric argument outside the domain of the operation.
    #[error("{name} out of range: {reason}")]
    OutOfRange { name: &'static str, reason: String },

    #[error("conflict score is undefined when every group is empty")]
    EmptyPartition,

    #[error("instance too large for exhaustive search: {assignments} assignments exceed the bound of {bound}")]
    TooLarge { assignments: f64, bound: u64 },

    #[error("zero vector has no Rayleigh quotient")]
    ZeroVector,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("inconsistent graph: {0}")]
    Graph(String),

    #[error("{path}:{line}: {message}")]
    Format {
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

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn out_of_range(name: &'static str, reason: impl Into<String>) -> Self {
        Error::OutOfRange {
            name,
            reason: reason.into(),
        }
    }
}
