use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error(transparent)]
    Model(#[from] urllc_noma::Error),

    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: io::Error },

    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn config(path: &Path, message: impl ToString) -> Self {
        CliError::Config {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }

    /// 1 for usage and configuration problems, 2 for everything that goes
    /// wrong after the inputs were accepted.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 1,
            CliError::Model(_) | CliError::Output { .. } | CliError::Failed(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
