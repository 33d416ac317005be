use std::path::PathBuf;

use coin_autodiff::AutodiffError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoinError {
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("{0}: file contains no edges")]
    EmptyInput(PathBuf),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("non-finite {term} at epoch {epoch}")]
    NonFinite { epoch: usize, term: &'static str },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CoinError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CoinError>;
