use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(negmom_core::Error),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl BenchError {
    /// Process exit code: 2 for configuration errors, 3 for runtime failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            BenchError::Config(_) => 2,
            _ => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io { path: path.into(), source }
    }
}

impl From<negmom_core::Error> for BenchError {
    fn from(e: negmom_core::Error) -> Self {
        match e {
            negmom_core::Error::Config(msg) => BenchError::Config(msg),
            other => BenchError::Core(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
