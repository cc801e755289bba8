use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite value: {0}")]
    Numeric(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("{source_name}: row {row}: {message}")]
    Ingestion {
        source_name: String,
        row: usize,
        message: String,
    },

    #[error("sampling error: bucket {bucket} is empty")]
    Sampling { bucket: String },

    #[error("metric undefined: {0}")]
    MetricUndefined(String),

    #[error("training aborted at step {step}: {message}")]
    TrainingDiverged { step: usize, message: String },

    #[error("checkpoint decode error: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
