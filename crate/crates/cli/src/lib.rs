//! Experiment runner behind the `gwrc` binary: configuration, dispatch,
//! and reproducible, atomically written outputs.

pub mod config;
pub mod error;
pub mod run;

use std::io::Write;
use std::path::Path;

pub use config::{parse_config, parse_config_str, ExperimentConfig, Format, Method, Overrides};
pub use error::CliError;
pub use run::{run_experiment, Report, Status};

/// Version tag of every JSON document the runner emits.
pub const SCHEMA: &str = "v1";

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
