use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("config: {0}")]
    Config(String),

    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("estimation failed: {0}")]
    Estimation(#[from] nrqae::Error),

    #[error("{0} verification row(s) flagged")]
    Flagged(usize),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Estimation(_) => 2,
            CliError::Flagged(_) => 3,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
