use std::path::PathBuf;

use schedbound_core::Error as CoreError;
use thiserror::Error;

/// Failures surfaced by a command, split by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid parameter: {0}")]
    Validation(String),

    #[error("cannot write output to {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot read {path}: {reason}")]
    Input { path: PathBuf, reason: String },

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Output { .. } | CliError::Input { .. } => 2,
            CliError::Core(e) => match e {
                CoreError::RankDeficient(_)
                | CoreError::NonPhysicalFit(_)
                | CoreError::Csv(_)
                | CoreError::Io(_) => 1,
                _ => 2,
            },
            CliError::Runtime(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}
