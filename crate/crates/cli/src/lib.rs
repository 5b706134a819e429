//! Driver library behind the `wtoda` binary: configuration, the five
//! subcommands, and the verification suites.

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;
pub mod verify;

use thiserror::Error;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("precondition refused: {0}")]
    Refused(String),
    #[error("tolerance failure: {0}")]
    Tolerance(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Refused(_) => 3,
            CliError::Tolerance(_) => 4,
            CliError::Io(_) | CliError::Other(_) => 1,
        }
    }
}

impl From<wtoda_core::Error> for CliError {
    fn from(e: wtoda_core::Error) -> Self {
        use wtoda_core::Error as E;
        match e {
            E::Refused(m) => CliError::Refused(m),
            E::Unsupported(_) | E::Pole { .. } | E::Singular { .. } => CliError::Refused(e.to_string()),
            E::InvalidArgument(m) => CliError::Config(m),
            E::DimensionMismatch { .. } => CliError::Config(e.to_string()),
            E::Overflow { .. } => CliError::Other(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
