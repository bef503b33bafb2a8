use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("binary trace length {0} is not a multiple of 8 bytes")]
    BinaryLength(u64),

    #[error("line size {0} is not a positive power of two")]
    InvalidLineSize(u64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("histogram block size {histogram} does not match configured line size {config}")]
    BlockSizeMismatch { histogram: u64, config: u64 },

    #[error("size grid is empty")]
    EmptyGrid,

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

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

    pub(crate) fn config(message: impl Into<String>) -> Self {
        Error::InvalidConfig(message.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
