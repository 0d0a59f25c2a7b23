//! Experiment runner around `ofcdm-core`: config files, CSV outputs, event
//! traces, and a self-validation battery.

pub mod ber;
pub mod checks;
pub mod config_file;
pub mod grid;
pub mod outage;
pub mod output;
pub mod trace;
pub mod validate;

use std::path::PathBuf;

/// Errors split by exit code: configuration problems exit 2, failed
/// validation checks exit 1.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
        }
    }
}

/// Shared run context resolved from the command line.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub config: config_file::FileConfig,
    pub out_dir: PathBuf,
    /// Worker pool size; 0 picks the rayon default.
    pub workers: usize,
}

impl RunContext {
    /// Runs `body` inside a rayon pool of the requested size.
    pub fn with_pool<T: Send>(&self, body: impl FnOnce() -> T + Send) -> Result<T, CliError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| CliError::Config(format!("cannot build worker pool: {e}")))?;
        Ok(pool.install(body))
    }
}
