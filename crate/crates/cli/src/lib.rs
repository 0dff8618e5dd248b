//! Experiment runner for the `tapc` solvers: single runs, demand sweeps and
//! property checks driven by a TOML configuration.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod config;
pub mod run;
pub mod sweep;

use std::path::Path;

use tapc_core::model::{generate_scenario, parse_scenario, NetworkScenario};
use tapc_core::{ModelError, SolveError};
use thiserror::Error;

pub use config::{Algorithm, Config, Overrides};

pub const EXIT_OK: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_VIOLATION: u8 = 3;
pub const EXIT_CONFIG: u8 = 64;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("scenario error: {0}")]
    Scenario(#[from] ModelError),

    #[error(transparent)]
    Solve(#[from] SolveError),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Scenario(_) => EXIT_CONFIG,
            CliError::Solve(SolveError::Model(_)) => EXIT_CONFIG,
            CliError::Solve(_) | CliError::Io { .. } => EXIT_ERROR,
        }
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub(crate) fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// The configured scenario: `scenario_file` if set, else a generated one.
pub fn build_scenario(cfg: &Config) -> Result<NetworkScenario, CliError> {
    match &cfg.scenario_file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            parse_scenario(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        }
        None => Ok(generate_scenario(&cfg.scenario.to_gen_config())?),
    }
}

/// Shortest round-trip representation, stable across platforms.
pub(crate) fn num(x: f64) -> String {
    format!("{x:e}")
}
