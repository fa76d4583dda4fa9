use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    #[error("unknown preset or missing file `{0}`")]
    UnknownScenario(String),

    #[error(
        "aborted at step {step}: population {edge:.3e} at the cutoff exceeds {limit:.1e}; \
         raise n_max"
    )]
    LeakExceeded { step: usize, edge: f64, limit: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Core(#[from] kerrfilter::Error),
}

impl ExperimentError {
    /// Process exit status: 2 for bad input, 3 for a leak abort, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Parse { .. }
            | ExperimentError::Invalid { .. }
            | ExperimentError::UnknownScenario(_) => 2,
            ExperimentError::LeakExceeded { .. } => 3,
            ExperimentError::Io { .. } | ExperimentError::Format { .. } | ExperimentError::Core(_) => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ExperimentError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        ExperimentError::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, ExperimentError>;
