use std::path::PathBuf;

use coin_core::CoinError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoinError),

    #[error("{0}: no such file or directory")]
    MissingPath(PathBuf),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    /// 2 for configuration and input problems, 1 for everything that fails
    /// while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::MissingPath(_) | Self::Config(_) => 2,
            Self::CheckFailed(_) => 1,
            Self::Core(e) => match e {
                CoinError::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => 2,
                CoinError::Parse { .. }
                | CoinError::EmptyInput(_)
                | CoinError::InvalidGraph(_)
                | CoinError::InvalidArgument(_)
                | CoinError::Config(_)
                | CoinError::Dimension(_)
                | CoinError::Checkpoint(_)
                | CoinError::Json(_) => 2,
                CoinError::Io { .. } | CoinError::NonFinite { .. } | CoinError::Autodiff(_) => 1,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
