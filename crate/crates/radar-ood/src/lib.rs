//! Monte Carlo harness, file formats and command line for the radar OOD
//! detection workbench. The numerical core lives in `radar_ood_core`.

use std::fs;
use std::path::Path;

mod bytes;
pub mod config;
pub mod csv_io;
pub mod dataset_io;
pub mod error;
pub mod montecarlo;
pub mod pipeline;
pub mod plot;
pub mod thresholds_io;
pub mod weights_io;

pub use error::{AppError, Result};

pub(crate) fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e)),
        _ => Ok(()),
    }
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, bytes).map_err(|e| AppError::io(path, e))
}
