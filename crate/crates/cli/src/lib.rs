//! Orchestration behind the `helmns` binary: configuration, simulation,
//! checks and report files.

pub mod config;
pub mod ladder;
pub mod run;

use thiserror::Error;

pub use config::{LadderConfig, RawConfig, RunConfig};
pub use ladder::compare_backends;
pub use run::{run, RunOutcome};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const SIMULATION: i32 = 3;
    pub const OUTPUT: i32 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("simulation aborted: {0}")]
    Simulation(helmns_core::Error),

    #[error("check {name} could not run: {source}")]
    Check { name: String, source: helmns_core::Error },

    #[error("output: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Simulation(_) => exit::SIMULATION,
            CliError::Check { .. } | CliError::Output(_) => exit::OUTPUT,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

/// One line per registered check: name, anchor and kind.
pub fn list_checks() -> String {
    helmns_core::verify::REGISTRY
        .iter()
        .map(|c| {
            let kind = if c.informational { "informational" } else { "pass/fail" };
            format!("{} ({}, {kind})\n", c.name, c.anchor)
        })
        .collect()
}

/// Caps the global worker pool from `HELMNS_THREADS` when it is set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("HELMNS_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("HELMNS_THREADS must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size worker pool: {e}")))
}
