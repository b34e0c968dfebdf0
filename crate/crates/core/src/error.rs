use thiserror::Error;

use crate::engine::FitResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure of the dense positive-definite solve, after all jitter retries.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("system is singular or indefinite after {attempts} attempts (smallest pivot {smallest_pivot:e})")]
pub struct SolveError {
    pub attempts: usize,
    pub smallest_pivot: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("non-finite feature value at row {row}, column {column}")]
    NonFiniteFeature { row: usize, column: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: row {row}, column {column}: {message}")]
    Csv {
        path: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("{path}: {message}")]
    Format { path: String, message: String },

    #[error(transparent)]
    Solve(#[from] SolveError),

    #[error("solver failed at iteration {iteration}: {source}")]
    Fit {
        iteration: usize,
        source: SolveError,
        partial: Box<FitResult>,
    },

    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn format(path: &std::path::Path, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.display().to_string(),
            message: message.into(),
        }
    }
}
