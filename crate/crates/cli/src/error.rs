use std::path::PathBuf;

use thiserror::Error;

use selfsort_core::CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {reason}")]
    Parse { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("unsupported format version {got}, expected {expected}")]
    Version { expected: u32, got: u32 },

    #[error("model expects n={model_n}, stream carries n={stream_n}")]
    DimensionMismatch { model_n: usize, stream_n: usize },

    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// Process exit code: 1 for verification failures, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
