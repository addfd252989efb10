//! Calibration records as TOML `[[threshold]]` tables.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use radar_ood_core::calibration::CalibrationResult;

use crate::error::{AppError, Result};
use crate::montecarlo::{Threshold, Thresholds};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    detector: String,
    scenario: String,
    doppler_bin: usize,
    pfa_target: f64,
    lambda: f64,
    eval_count: usize,
    empirical_pfa: f64,
    seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
struct File {
    threshold: Vec<Record>,
}

pub fn encode_thresholds(t: &Thresholds) -> String {
    let file = File {
        threshold: t
            .0
            .iter()
            .map(|t| Record {
                detector: t.result.detector.id().into(),
                scenario: t.scenario.id().into(),
                doppler_bin: t.doppler_bin,
                pfa_target: t.result.target_pfa,
                lambda: t.result.threshold,
                eval_count: t.result.eval_count,
                empirical_pfa: t.result.empirical_pfa,
                seed: t.result.seed,
            })
            .collect(),
    };
    toml::to_string(&file).expect("thresholds serialize")
}

pub fn decode_thresholds(text: &str) -> std::result::Result<Thresholds, String> {
    let file: File = toml::from_str(text).map_err(|e| e.to_string())?;
    file.threshold
        .into_iter()
        .map(|r| {
            Ok(Threshold {
                scenario: r.scenario.parse().map_err(|e: radar_ood_core::Error| e.to_string())?,
                doppler_bin: r.doppler_bin,
                result: CalibrationResult {
                    detector: r.detector.parse().map_err(|e: radar_ood_core::Error| e.to_string())?,
                    threshold: r.lambda,
                    target_pfa: r.pfa_target,
                    eval_count: r.eval_count,
                    empirical_pfa: r.empirical_pfa,
                    seed: r.seed,
                },
            })
        })
        .collect::<std::result::Result<Vec<_>, String>>()
        .map(Thresholds)
}

pub fn write_thresholds(path: &Path, t: &Thresholds) -> Result<()> {
    crate::write_file(path, encode_thresholds(t).as_bytes())
}

pub fn read_thresholds(path: &Path) -> Result<Thresholds> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    decode_thresholds(&text).map_err(|e| AppError::format(path, e))
}
