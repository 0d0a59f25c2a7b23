//! Deterministic output files with config-digest headers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Writes a run artifact: a two-line comment header binding the file to the
/// command, config digest, and seed, followed by the body. Contents depend
/// only on the inputs, never on time or machine state.
pub fn write_artifact(
    dir: &Path,
    name: &str,
    command: &str,
    digest: &str,
    seed: u64,
    body: &str,
) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut f = fs::File::create(&path)?;
    write!(f, "# ofcdm-sim {command}\n# config_digest={digest} seed={seed}\n{body}")?;
    Ok(path)
}

/// Formats an error-rate estimate; undefined estimates print as `nan`.
pub fn fmt_rate(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{v:.6e}"),
        None => "nan".to_string(),
    }
}
