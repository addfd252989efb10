//! The pipeline stages behind each CLI subcommand.

use std::path::{Path, PathBuf};

use log::info;

use radar_ood_core::calibration::binomial_sigma;
use radar_ood_core::detectors::DetectorKind;
use radar_ood_core::rng::tags;
use radar_ood_core::scenario::{dataset_tag, generate_dataset, Hypothesis};
use radar_ood_core::vae::{train_with_progress, EpochStats, VaeParams};
use radar_ood_core::ComplexVec;

use crate::config::Config;
use crate::csv_io::{self, fmt_f64};
use crate::dataset_io::{read_dataset, write_dataset};
use crate::error::{AppError, Result};
use crate::montecarlo::{self, DopplerMap, PdCurve, PfaCheck, ScoreHistograms, Setup, Thresholds};
use crate::plot;
use crate::thresholds_io::{read_thresholds, write_thresholds};
use crate::weights_io::{load_weights, save_weights};

/// Log seed, config hash and versions for a stage.
pub fn log_run(stage: &str, cfg: &Config) {
    info!(
        "{stage}: radar-ood {} seed={} config_sha256={}",
        env!("CARGO_PKG_VERSION"),
        cfg.seed,
        cfg.hash()
    );
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Train,
    Eval,
}

impl Purpose {
    fn tag_domain(self) -> u32 {
        match self {
            Purpose::Train => tags::TRAIN_DATA,
            Purpose::Eval => tags::EVAL_DATA,
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Purpose::Train => "train",
            Purpose::Eval => "eval",
        }
    }
}

/// Write a dataset and return its path.
pub fn gen_data(
    cfg: &Config,
    purpose: Purpose,
    hypothesis: Hypothesis,
    snr_db: f64,
    count: usize,
    out: Option<PathBuf>,
) -> Result<PathBuf> {
    log_run("gen-data", cfg);
    let spec = cfg.scenario_spec()?;
    let tag = dataset_tag(spec.noise_kind, hypothesis, purpose.tag_domain());
    let data = generate_dataset(&spec, hypothesis, snr_db, count, tag)?;
    let path = out.unwrap_or_else(|| {
        cfg.output(&format!(
            "{}_{}_{}.rds",
            spec.noise_kind,
            purpose.id(),
            if hypothesis == Hypothesis::H0 { "h0" } else { "h1" }
        ))
    });
    write_dataset(&path, &data)?;
    info!("wrote {} snapshots to {}", data.len(), path.display());
    Ok(path)
}

/// The H0 training set `train.n_samples` long, generated in memory.
pub fn training_set(cfg: &Config) -> Result<Vec<ComplexVec>> {
    let spec = cfg.scenario_spec()?;
    let tag = dataset_tag(spec.noise_kind, Hypothesis::H0, tags::TRAIN_DATA);
    Ok(generate_dataset(&spec, Hypothesis::H0, 0.0, cfg.train.n_samples, tag)?
        .into_iter()
        .map(|s| s.z)
        .collect())
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub params: VaeParams,
    pub history: Vec<EpochStats>,
    pub weights: PathBuf,
}

/// Train on `dataset` (an RDS1 file of H0 snapshots) or on a generated set.
pub fn train(cfg: &Config, dataset: Option<&Path>) -> Result<TrainReport> {
    log_run("train", cfg);
    let tc = cfg.train_config()?;
    let data = match dataset {
        Some(p) => {
            let snaps = read_dataset(p)?;
            if snaps.iter().any(|s| s.hypothesis != Hypothesis::H0) {
                return Err(AppError::format(p, "training data must be target-free (H0)"));
            }
            snaps.into_iter().map(|s| s.z).collect()
        }
        None => training_set(cfg)?,
    };
    let outcome = train_with_progress(&data, &tc, |s| {
        info!(
            "epoch {:>3}: train {:.5} (rec {:.5}, kl {:.5}) val {:.5}",
            s.epoch, s.train.total, s.train.rec, s.train.kl, s.val.total
        )
    })?;
    let mut params = outcome.params;
    // The returned model matches what a reload of the file yields.
    params.round_to_f32();
    let weights = cfg.weights_path()?;
    save_weights(&params, &weights)?;
    let kind = cfg.noise_kind()?;
    write_history(&cfg.output(&format!("train_{kind}_history.csv")), &outcome.history)?;
    info!("wrote {}", weights.display());
    Ok(TrainReport {
        params,
        history: outcome.history,
        weights,
    })
}

fn write_history(path: &Path, history: &[EpochStats]) -> Result<()> {
    crate::ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| AppError::format(path, e.to_string()))?;
    let io = |e: csv::Error| AppError::format(path, e.to_string());
    w.write_record(["epoch", "train_total", "train_rec", "train_kl", "val_total", "val_rec", "val_kl"])
        .map_err(io)?;
    for s in history {
        w.write_record([
            s.epoch.to_string(),
            fmt_f64(s.train.total),
            fmt_f64(s.train.rec),
            fmt_f64(s.train.kl),
            fmt_f64(s.val.total),
            fmt_f64(s.val.rec),
            fmt_f64(s.val.kl),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| AppError::io(path, e))
}

/// Load the VAE when the configured detectors include it.
pub fn vae_for(cfg: &Config, detectors: &[DetectorKind]) -> Result<Option<VaeParams>> {
    if !detectors.contains(&DetectorKind::Vae) {
        return Ok(None);
    }
    let params = load_weights(&cfg.weights_path()?)?;
    if params.arch.m != cfg.scenario.m {
        return Err(AppError::Config(format!(
            "weights expect m = {}, scenario has m = {}",
            params.arch.m, cfg.scenario.m
        )));
    }
    Ok(Some(params))
}

fn thresholds_path(cfg: &Config) -> Result<PathBuf> {
    Ok(cfg.output(&format!("thresholds_{}.toml", cfg.noise_kind()?)))
}

/// Calibrate at `bins` and write the records.
pub fn calibrate(cfg: &Config, bins: &[usize]) -> Result<Thresholds> {
    log_run("calibrate", cfg);
    let spec = cfg.scenario_spec()?;
    let detectors = cfg.detectors()?;
    let vae = vae_for(cfg, &detectors)?;
    let setup = Setup {
        spec: &spec,
        detectors: &detectors,
        vae: vae.as_ref(),
        estimator: cfg.estimator()?,
    };
    let t = montecarlo::calibrate(&setup, bins, cfg.pfa()?, cfg.calibrate.eval_count)?;
    let path = thresholds_path(cfg)?;
    write_thresholds(&path, &t)?;
    for th in &t.0 {
        info!(
            "{} d={}: lambda = {:.6} ({} H0 trials, PFA sd {:.2e})",
            th.result.detector,
            th.doppler_bin,
            th.result.threshold,
            th.result.eval_count,
            binomial_sigma(th.result.target_pfa, th.result.eval_count)
        );
    }
    info!("wrote {}", path.display());
    Ok(t)
}

/// Thresholds from `paths.thresholds` when set, else calibrated in-process.
fn thresholds_for(cfg: &Config, bins: &[usize]) -> Result<Thresholds> {
    if cfg.paths.thresholds.as_os_str().is_empty() {
        calibrate(cfg, bins)
    } else {
        read_thresholds(&cfg.paths.thresholds)
    }
}

/// Fresh-H0 false-alarm rates at the configured bin.
pub fn pfa_check(cfg: &Config) -> Result<Vec<PfaCheck>> {
    let spec = cfg.scenario_spec()?;
    let detectors = cfg.detectors()?;
    let thresholds = thresholds_for(cfg, &[spec.doppler_bin])?;
    log_run("pfa-check", cfg);
    let vae = vae_for(cfg, &detectors)?;
    let setup = Setup {
        spec: &spec,
        detectors: &detectors,
        vae: vae.as_ref(),
        estimator: cfg.estimator()?,
    };
    let checks = montecarlo::empirical_pfa(&setup, &thresholds, spec.doppler_bin, cfg.run.trials)?;
    csv_io::write_pfa_csv(&cfg.output(&format!("pfa_{}_d{}.csv", spec.noise_kind, spec.doppler_bin)), &checks)?;
    Ok(checks)
}

/// First failing embedded false-alarm check, as an error.
pub fn enforce_pfa(curves: &[PdCurve]) -> Result<()> {
    match curves.iter().map(PdCurve::pfa_check).find(|c| !c.within_3_sigma()) {
        Some(c) => Err(c.to_error()),
        None => Ok(()),
    }
}

/// Pd curves at the configured bin; writes CSV (and SVG when `plot` is set).
pub fn pd_curve(cfg: &Config, plot_path: Option<&Path>) -> Result<Vec<PdCurve>> {
    let spec = cfg.scenario_spec()?;
    let detectors = cfg.detectors()?;
    let vae = vae_for(cfg, &detectors)?;
    let thresholds = thresholds_for(cfg, &[spec.doppler_bin])?;
    log_run("pd-curve", cfg);
    let setup = Setup {
        spec: &spec,
        detectors: &detectors,
        vae: vae.as_ref(),
        estimator: cfg.estimator()?,
    };
    let curves = montecarlo::run_pd_curve(&setup, &thresholds, spec.doppler_bin, cfg.run.trials)?;
    let csv = cfg.output(&format!("pd_{}_d{}.csv", spec.noise_kind, spec.doppler_bin));
    csv_io::write_pd_csv(&csv, &csv_io::pd_rows(&curves))?;
    info!("wrote {}", csv.display());
    if let Some(p) = plot_path {
        let title = format!("Pd vs SNR, {} (PFA {})", spec.noise_kind, cfg.calibrate.pfa);
        crate::write_file(p, plot::line_plot(&plot::series_from_curves(&curves), &title).as_bytes())?;
    }
    Ok(curves)
}

/// Pd over every Doppler bin; writes the CSV and one heat map per detector.
pub fn doppler_map(cfg: &Config) -> Result<(Vec<DopplerMap>, Vec<PdCurve>)> {
    let spec = cfg.scenario_spec()?;
    let detectors = cfg.detectors()?;
    let vae = vae_for(cfg, &detectors)?;
    let bins: Vec<usize> = (0..spec.m).collect();
    let thresholds = thresholds_for(cfg, &bins)?;
    log_run("doppler-map", cfg);
    let setup = Setup {
        spec: &spec,
        detectors: &detectors,
        vae: vae.as_ref(),
        estimator: cfg.estimator()?,
    };
    let (maps, curves) = montecarlo::run_doppler_map(&setup, &thresholds, cfg.run.trials)?;
    let csv = cfg.output(&format!("doppler_{}.csv", spec.noise_kind));
    csv_io::write_pd_csv(&csv, &csv_io::pd_rows(&curves))?;
    for map in &maps {
        let title = format!("Pd over SNR and Doppler bin, {} / {}", map.detector, map.scenario);
        let svg = cfg.output(&format!("doppler_{}_{}.svg", spec.noise_kind, map.detector));
        crate::write_file(&svg, plot::heatmap(map, &title).as_bytes())?;
    }
    info!("wrote {}", csv.display());
    Ok((maps, curves))
}

/// VAE score histograms under H0 and H1 at `run.histogram_snr`.
pub fn histogram(cfg: &Config) -> Result<ScoreHistograms> {
    let spec = cfg.scenario_spec()?;
    let vae = vae_for(cfg, &[DetectorKind::Vae])?.expect("VAE requested");
    log_run("histogram", cfg);
    let h = montecarlo::run_histogram(
        &vae,
        &spec,
        &cfg.run.histogram_snr,
        cfg.run.histogram_samples,
        cfg.run.histogram_bins,
    )?;
    csv_io::write_histogram_csv(&cfg.output(&format!("hist_{}.csv", spec.noise_kind)), &h)?;
    csv_io::write_overlap_csv(&cfg.output(&format!("hist_{}_overlap.csv", spec.noise_kind)), &h)?;
    for (snr, o) in h.overlaps() {
        info!("SNR {snr} dB: H0/H1 overlap {o:.4}");
    }
    Ok(h)
}

/// Render a Pd CSV as a line plot, or as heat maps when it spans several bins.
pub fn plot(csv: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let rows = csv_io::read_pd_csv(csv)?;
    if rows.is_empty() {
        return Err(AppError::format(csv, "no rows to plot"));
    }
    let multi_bin = rows.iter().any(|r| r.doppler_bin != rows[0].doppler_bin);
    if !multi_bin {
        let title = format!("Pd vs SNR, {}", rows[0].scenario);
        crate::write_file(out, plot::line_plot(&plot::series_from_rows(&rows), &title).as_bytes())?;
        return Ok(vec![out.to_path_buf()]);
    }
    let mut written = Vec::new();
    let mut detectors: Vec<&str> = rows.iter().map(|r| r.detector.as_str()).collect();
    detectors.dedup();
    for det in detectors {
        let mine: Vec<&csv_io::PdRow> = rows.iter().filter(|r| r.detector == det).collect();
        let bins = mine.iter().map(|r| r.doppler_bin).max().unwrap_or(0) + 1;
        let mut snr: Vec<f64> = mine.iter().map(|r| r.snr_db).collect();
        snr.sort_by(f64::total_cmp);
        snr.dedup();
        let mut pd = vec![vec![0.0; snr.len()]; bins];
        for r in &mine {
            let j = snr.iter().position(|s| *s == r.snr_db).expect("grid value");
            pd[r.doppler_bin][j] = r.pd;
        }
        let map = DopplerMap {
            detector: det.parse().map_err(|e: radar_ood_core::Error| AppError::format(csv, e.to_string()))?,
            scenario: rows[0].scenario.parse().map_err(|e: radar_ood_core::Error| AppError::format(csv, e.to_string()))?,
            snr_db: snr,
            ci_halfwidth: vec![],
            pd,
        };
        let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("doppler");
        let path = out.with_file_name(format!("{stem}_{det}.svg"));
        crate::write_file(&path, plot::heatmap(&map, &format!("Pd map, {det}")).as_bytes())?;
        written.push(path);
    }
    Ok(written)
}
