use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid range: {0}")]
    InvalidRange(String),

    #[error("invalid response: {0}")]
    InvalidResponse(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("column {column} has zero variance")]
    ZeroVariance { column: usize },

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("singular information matrix: {0}")]
    SingularInformation(String),

    #[error("no events in survival data")]
    NoEvents,

    #[error("covariate {column} carries no information (all values identical)")]
    NoInformation { column: usize },

    #[error("degenerate variance for coefficient {index}: {value}")]
    DegenerateVariance { index: usize, value: f64 },

    #[error("coefficient index {index} out of range (q = {q})")]
    IndexOutOfRange { index: usize, q: usize },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Whether the error stems from user input (files, flags, configuration)
    /// rather than a numerical failure.
    pub fn is_user_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::InvalidRange(_)
                | Error::InvalidResponse(_)
                | Error::DimensionMismatch(_)
                | Error::Parse { .. }
                | Error::Alignment(_)
                | Error::Config(_)
                | Error::Io { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
