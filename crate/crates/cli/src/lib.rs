//! Command-line orchestration: configuration, experiment stages and run reports.

pub mod commands;
pub mod config;
pub mod report;

pub use commands::{run, Command, Outcome};
pub use config::{BackendKind, Experiment, ExperimentConfig, Overrides};
pub use report::RunReport;

use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => commands::EXIT_CONFIG,
            CliError::Io(_) => commands::EXIT_STAGE_FAILED,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
