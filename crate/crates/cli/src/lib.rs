//! Command-line front end: grids, critical-point reports, table checks,
//! dynamics checks and anti-Zeno curves.

pub mod commands;
pub mod descriptor;
pub mod output;

pub use commands::{run, Cli, Status};

/// Environment variable setting the worker count; all cores when unset.
pub const THREADS_ENV: &str = "KINSCAPE_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] kinscape::Error),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    /// Usage, validation and i/o errors all exit with 2.
    pub fn exit_code(&self) -> u8 {
        2
    }
}

/// Sizes the global worker pool from [`THREADS_ENV`].
pub fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}
