use std::io;
use std::path::PathBuf;

use radar_ood_core::detectors::DetectorKind;
use radar_ood_core::scenario::NoiseKind;

pub type Result<T> = std::result::Result<T, AppError>;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{}: {reason}", path.display())]
    Format { path: PathBuf, reason: String },

    #[error("VAE weights not found at {} (run `radar-ood train` first)", .0.display())]
    MissingWeights(PathBuf),

    #[error(transparent)]
    Core(#[from] radar_ood_core::Error),

    #[error(
        "PFA sanity check failed for {detector} in {scenario} (d = {doppler_bin}): \
         empirical {empirical:.5} vs target {target} (3 sigma = {band:.5}, {n_trials} trials)"
    )]
    PfaSanity {
        detector: DetectorKind,
        scenario: NoiseKind,
        doppler_bin: usize,
        empirical: f64,
        target: f64,
        band: f64,
        n_trials: usize,
    },
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        AppError::Format {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// Process exit status. 2 is left to argument parsing.
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Config(_) => 3,
            AppError::Io { .. } | AppError::Format { .. } => 4,
            AppError::MissingWeights(_) | AppError::Core(radar_ood_core::Error::MissingModel(_)) => 5,
            AppError::Core(_) => 6,
            AppError::PfaSanity { .. } => 7,
        }
    }
}
