//! Batch driver for `lsfwi`: configuration loading, the subcommands, and
//! run manifests.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod manifest;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("computation failed: {0}")]
    Compute(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// Process exit status for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<lsfwi::Error> for CliError {
    fn from(e: lsfwi::Error) -> Self {
        use lsfwi::Error as E;
        match e {
            E::Io(_) | E::Json(_) | E::Format(_) => CliError::Io(e.to_string()),
            E::InvalidGrid(_) | E::InvalidBackground(_) | E::InvalidConfig(_) | E::EmptyInitialization { .. } => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Compute(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
