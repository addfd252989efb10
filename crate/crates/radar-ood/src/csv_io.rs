//! CSV output. Floats are written with 17 significant digits so a parse
//! recovers the exact `f64`.

use std::path::Path;

use serde::Deserialize;

use crate::error::{AppError, Result};
use crate::montecarlo::{PdCurve, PfaCheck, ScoreHistograms};

pub const PD_HEADER: [&str; 10] = [
    "scenario",
    "detector",
    "doppler_bin",
    "snr_db",
    "pfa_target",
    "pfa_empirical",
    "pd",
    "ci_halfwidth",
    "n_trials",
    "seed",
];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// One grid point of a Pd curve.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct PdRow {
    pub scenario: String,
    pub detector: String,
    pub doppler_bin: usize,
    pub snr_db: f64,
    pub pfa_target: f64,
    pub pfa_empirical: f64,
    pub pd: f64,
    pub ci_halfwidth: f64,
    pub n_trials: usize,
    pub seed: u64,
}

/// Rows ordered by (scenario, detector, Doppler bin, SNR).
pub fn pd_rows(curves: &[PdCurve]) -> Vec<PdRow> {
    let mut sorted: Vec<&PdCurve> = curves.iter().collect();
    sorted.sort_by_key(|c| (c.scenario, c.detector.index(), c.doppler_bin));
    sorted
        .iter()
        .flat_map(|c| {
            c.points.iter().map(move |p| PdRow {
                scenario: c.scenario.id().to_string(),
                detector: c.detector.id().to_string(),
                doppler_bin: c.doppler_bin,
                snr_db: p.snr_db,
                pfa_target: c.pfa_target,
                pfa_empirical: c.pfa_empirical,
                pd: p.pd,
                ci_halfwidth: p.ci_halfwidth,
                n_trials: p.n_trials,
                seed: c.seed,
            })
        })
        .collect()
}

fn csv_err(path: &Path, e: csv::Error) -> AppError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => AppError::io(path, io),
        other => AppError::format(path, format!("{other:?}")),
    }
}

fn write_records(path: &Path, header: &[&str], records: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    crate::ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in records {
        w.write_record(&r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

pub fn pd_record(r: &PdRow) -> Vec<String> {
    vec![
        r.scenario.clone(),
        r.detector.clone(),
        r.doppler_bin.to_string(),
        fmt_f64(r.snr_db),
        fmt_f64(r.pfa_target),
        fmt_f64(r.pfa_empirical),
        fmt_f64(r.pd),
        fmt_f64(r.ci_halfwidth),
        r.n_trials.to_string(),
        r.seed.to_string(),
    ]
}

pub fn write_pd_csv(path: &Path, rows: &[PdRow]) -> Result<()> {
    write_records(path, &PD_HEADER, rows.iter().map(pd_record))
}

pub fn read_pd_csv(path: &Path) -> Result<Vec<PdRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    if header != PD_HEADER {
        return Err(AppError::format(path, "header does not match the Pd schema"));
    }
    r.deserialize().map(|row| row.map_err(|e| csv_err(path, e))).collect()
}

pub fn write_pfa_csv(path: &Path, checks: &[PfaCheck]) -> Result<()> {
    write_records(
        path,
        &[
            "scenario",
            "detector",
            "doppler_bin",
            "threshold",
            "pfa_target",
            "pfa_empirical",
            "sigma",
            "within_3sigma",
            "n_trials",
            "seed",
        ],
        checks.iter().map(|c| {
            vec![
                c.scenario.id().to_string(),
                c.detector.id().to_string(),
                c.doppler_bin.to_string(),
                fmt_f64(c.threshold),
                fmt_f64(c.target_pfa),
                fmt_f64(c.empirical_pfa),
                fmt_f64(c.sigma()),
                c.within_3_sigma().to_string(),
                c.n_trials.to_string(),
                c.seed.to_string(),
            ]
        }),
    )
}

/// Per-bin probability masses; H0 is repeated under every SNR entry.
pub fn write_histogram_csv(path: &Path, h: &ScoreHistograms) -> Result<()> {
    let mut rows = Vec::new();
    for (snr, p1) in &h.h1 {
        for (hyp, masses) in [("h0", &h.h0), ("h1", p1)] {
            for (i, mass) in masses.iter().enumerate() {
                rows.push(vec![
                    h.scenario.id().to_string(),
                    fmt_f64(*snr),
                    hyp.to_string(),
                    fmt_f64(h.edges[i]),
                    fmt_f64(h.edges[i + 1]),
                    fmt_f64(*mass),
                ]);
            }
        }
    }
    write_records(path, &["scenario", "snr_db", "hypothesis", "bin_lo", "bin_hi", "mass"], rows)
}

pub fn write_overlap_csv(path: &Path, h: &ScoreHistograms) -> Result<()> {
    write_records(
        path,
        &["scenario", "snr_db", "overlap", "n_samples"],
        h.overlaps().into_iter().map(|(snr, o)| {
            vec![
                h.scenario.id().to_string(),
                fmt_f64(snr),
                fmt_f64(o),
                h.h0_scores.len().to_string(),
            ]
        }),
    )
}
