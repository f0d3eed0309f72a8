use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config file {path}: line {line}: {msg}")]
    ConfigSyntax { path: PathBuf, line: usize, msg: String },

    #[error("config file {path}: unknown key `{key}` for subcommand `{command}`")]
    UnknownKey { path: PathBuf, key: String, command: String },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] sos_core::Error),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("checks failed: {}", .0.join(", "))]
    ChecksFailed(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ChecksFailed(_) => 1,
            CliError::Core(_) | CliError::Io { .. } | CliError::Json(_) | CliError::Csv(_) => 1,
            CliError::ConfigSyntax { .. } | CliError::UnknownKey { .. } | CliError::Usage(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
