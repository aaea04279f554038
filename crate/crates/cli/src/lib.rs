//! Command-line front end for the forecasting pipeline.
//!
//! Four subcommands mirror the pipeline stages: `ingest` assembles the
//! per-region weekly datasets, `explore` screens predictors over the full
//! study period, `forecast` runs the rolling retraining experiments, and
//! `report` scores forecast tracks against the persistence baseline.
//!
//! Exit codes: 0 on success, 1 when some forecasting plans failed but the
//! rest completed and were written, 2 for configuration or input errors.

use std::path::Path;

use thiserror::Error;

pub mod commands;
pub mod config;
pub mod plot;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Input(#[from] unrestcast_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{failed} of {total} forecasting plans failed")]
    Partial { failed: usize, total: usize },
}

impl CliError {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code this error maps to.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Partial { .. } => 1,
            _ => 2,
        }
    }
}
