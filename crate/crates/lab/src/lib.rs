//! Configuration, report writers and subcommand pipelines behind the
//! `nonlocal-lab` binary.

pub mod config;
pub mod report;
pub mod run;

/// Failures that are not check failures; they map to exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<nonlocal_core::Error> for LabError {
    fn from(e: nonlocal_core::Error) -> Self {
        LabError::Config(e.to_string())
    }
}
