//! Command-line front end for `aoi-mec`.
//!
//! Exit codes: 0 success, 2 configuration or I/O error, 3 unstable
//! configuration, 4 validation failure.

use std::io;
use std::path::PathBuf;

pub mod args;
pub mod commands;
pub mod config;
pub mod format;
pub mod sweep;
pub mod validate;

pub use args::Cli;
pub use config::ConfigError;

/// Environment variable capping the worker-thread count.
pub const THREADS_ENV: &str = "AOI_MEC_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Config { path: PathBuf, source: ConfigError },

    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("{0}")]
    Unstable(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error(transparent)]
    Library(aoi_mec::Error),
}

impl From<aoi_mec::Error> for CliError {
    fn from(e: aoi_mec::Error) -> Self {
        match e {
            aoi_mec::Error::UnstableConfig(_) | aoi_mec::Error::EmptyStableInterval => CliError::Unstable(e.to_string()),
            e => CliError::Library(e),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use aoi_mec::Error as E;
        match self {
            CliError::Config { .. } | CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Library(E::InvalidConfig(_) | E::NotHomogeneous | E::InvalidParams(_) | E::UeOutOfRange { .. }) => 2,
            CliError::Unstable(_) => 3,
            CliError::Validation(_) => 4,
            CliError::Library(_) => 1,
        }
    }
}

/// Size the global thread pool from [`THREADS_ENV`], if set.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size the thread pool: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

/// Run one parsed command line, writing the human-readable report to `out`.
pub fn run(cli: Cli, out: &mut dyn io::Write) -> Result<(), CliError> {
    use args::Command;
    match cli.command {
        Command::Analytic(a) => commands::cmd_analytic(&a, out),
        Command::Sweep(a) => commands::cmd_sweep(&a, out),
        Command::Validate(a) => commands::cmd_validate(&a, out),
        Command::Optimize(a) => commands::cmd_optimize(&a, out),
        Command::Simulate(a) => commands::cmd_simulate(&a, out),
    }
}
