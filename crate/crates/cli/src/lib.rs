//! Library side of the `lse-bench` tool: configuration resolution, result
//! files, experiment commands and the self-check suite.

pub mod config;
pub mod output;
pub mod run;
pub mod selfcheck;

use lse_core::Error as CoreError;
use thiserror::Error;

/// Failure classes of the command-line tool; each maps to one exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Output(_) => 4,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidConfig(msg) => CliError::Config(msg),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

/// Worker count requested through `LSE_BENCH_THREADS`; `0` or unset means
/// one worker per core.
pub fn threads_from_env() -> Result<usize, CliError> {
    match std::env::var("LSE_BENCH_THREADS") {
        Err(_) => Ok(0),
        Ok(v) if v.trim().is_empty() => Ok(0),
        Ok(v) => v.trim().parse().map_err(|_| {
            CliError::Config(format!(
                "LSE_BENCH_THREADS must be a nonnegative integer, got '{v}'"
            ))
        }),
    }
}
