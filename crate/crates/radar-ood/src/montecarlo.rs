//! Seeded Monte Carlo over a rayon worker pool.
//!
//! Trial `i` of a run draws from substream `(seed, tag, i)`; results are
//! collected in trial order and reduced sequentially, so outputs do not
//! depend on the number of workers.

use rayon::prelude::*;

use radar_ood_core::calibration::{binomial_sigma, CalibrationResult};
use radar_ood_core::detectors::DetectorKind;
use radar_ood_core::estimators::EstimatorConfig;
use radar_ood_core::rng::{stream_tag, tags, RadarRng};
use radar_ood_core::scenario::{NoiseKind, ScenarioSpec, Simulator};
use radar_ood_core::trial::{Statistics, TrialContext};
use radar_ood_core::vae::VaeParams;

use crate::error::{AppError, Result};

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "RADAR_OOD_WORKERS";

pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Run `f` inside a dedicated pool of `workers` threads.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

/// `f(0), ..., f(n - 1)` in parallel, returned in index order.
pub fn par_trials<T: Send>(n: usize, f: impl Fn(u64) -> radar_ood_core::Result<T> + Sync + Send) -> Result<Vec<T>> {
    Ok((0..n as u64).into_par_iter().map(f).collect::<radar_ood_core::Result<Vec<T>>>()?)
}

/// Tag sub-index for a scenario and Doppler bin.
pub fn stream_sub(kind: NoiseKind, doppler_bin: usize) -> u32 {
    (kind.code() << 16) | doppler_bin as u32
}

fn tag(domain: u32, spec: &ScenarioSpec) -> u64 {
    stream_tag(domain, stream_sub(spec.noise_kind, spec.doppler_bin))
}

/// Statistics of `n` target-free trials from stream `(spec.seed, domain/sub, i)`.
pub fn collect_h0(ctx: &TrialContext<'_>, domain: u32, n: usize) -> Result<Vec<Statistics>> {
    let spec = ctx.simulator().spec();
    let (seed, tag) = (spec.seed, tag(domain, spec));
    par_trials(n, |i| ctx.h0(&mut RadarRng::substream(seed, tag, i)))
}

fn column(stats: &[Statistics], kind: DetectorKind) -> Vec<f64> {
    stats.iter().filter_map(|s| s.get(kind)).collect()
}

/// One calibrated threshold with its scenario context.
#[derive(Debug, Clone, PartialEq)]
pub struct Threshold {
    pub scenario: NoiseKind,
    /// Bin the calibration ran at. The VAE threshold serves every bin.
    pub doppler_bin: usize,
    pub result: CalibrationResult,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Thresholds(pub Vec<Threshold>);

impl Thresholds {
    pub fn get(&self, scenario: NoiseKind, detector: DetectorKind, doppler_bin: usize) -> Option<&Threshold> {
        self.0.iter().find(|t| {
            t.scenario == scenario
                && t.result.detector == detector
                && (detector == DetectorKind::Vae || t.doppler_bin == doppler_bin)
        })
    }

    pub fn value(&self, scenario: NoiseKind, detector: DetectorKind, doppler_bin: usize) -> Result<f64> {
        self.get(scenario, detector, doppler_bin)
            .map(|t| t.result.threshold)
            .ok_or_else(|| {
                AppError::Config(format!(
                    "no calibrated threshold for {detector} in {scenario} at Doppler bin {doppler_bin}"
                ))
            })
    }

    pub fn merge(&mut self, other: Thresholds) {
        for t in other.0 {
            self.0.retain(|o| {
                !(o.scenario == t.scenario && o.result.detector == t.result.detector && o.doppler_bin == t.doppler_bin)
            });
            self.0.push(t);
        }
    }
}

/// Inputs shared by every Monte Carlo stage.
#[derive(Debug, Clone, Copy)]
pub struct Setup<'a> {
    pub spec: &'a ScenarioSpec,
    pub detectors: &'a [DetectorKind],
    pub vae: Option<&'a VaeParams>,
    pub estimator: EstimatorConfig,
}

impl<'a> Setup<'a> {
    fn context(&self, doppler_bin: usize, detectors: &[DetectorKind]) -> Result<TrialContext<'a>> {
        let sim = Simulator::new(&self.spec.with_doppler(doppler_bin))?;
        Ok(TrialContext::new(sim, detectors, self.vae, self.estimator)?)
    }
}

/// Calibrate every detector at each bin in `bins` from `eval_count` H0
/// trials. The VAE is calibrated once, at the first bin.
pub fn calibrate(setup: &Setup<'_>, bins: &[usize], target_pfa: f64, eval_count: usize) -> Result<Thresholds> {
    let mut out = Thresholds::default();
    for (j, &d) in bins.iter().enumerate() {
        let dets: Vec<DetectorKind> = setup
            .detectors
            .iter()
            .copied()
            .filter(|k| j == 0 || *k != DetectorKind::Vae)
            .collect();
        if dets.is_empty() {
            continue;
        }
        let ctx = setup.context(d, &dets)?;
        let stats = collect_h0(&ctx, tags::CALIBRATION_H0, eval_count)?;
        for &kind in ctx.detectors() {
            let result = CalibrationResult::from_scores(kind, &column(&stats, kind), target_pfa, setup.spec.seed)?;
            out.0.push(Threshold {
                scenario: setup.spec.noise_kind,
                doppler_bin: d,
                result,
            });
        }
    }
    Ok(out)
}

/// Outcome of a fresh-H0 false-alarm check for one detector.
#[derive(Debug, Clone, PartialEq)]
pub struct PfaCheck {
    pub detector: DetectorKind,
    pub scenario: NoiseKind,
    pub doppler_bin: usize,
    pub threshold: f64,
    pub target_pfa: f64,
    pub empirical_pfa: f64,
    pub n_trials: usize,
    pub seed: u64,
}

impl PfaCheck {
    pub fn sigma(&self) -> f64 {
        binomial_sigma(self.target_pfa, self.n_trials)
    }

    pub fn within_3_sigma(&self) -> bool {
        (self.empirical_pfa - self.target_pfa).abs() <= 3.0 * self.sigma()
    }

    pub fn to_error(&self) -> AppError {
        AppError::PfaSanity {
            detector: self.detector,
            scenario: self.scenario,
            doppler_bin: self.doppler_bin,
            empirical: self.empirical_pfa,
            target: self.target_pfa,
            band: 3.0 * self.sigma(),
            n_trials: self.n_trials,
        }
    }
}

/// Fraction of `n_trials` fresh H0 trials above each detector's threshold.
pub fn empirical_pfa(setup: &Setup<'_>, thresholds: &Thresholds, doppler_bin: usize, n_trials: usize) -> Result<Vec<PfaCheck>> {
    let ctx = setup.context(doppler_bin, setup.detectors)?;
    let stats = collect_h0(&ctx, tags::FRESH_H0, n_trials)?;
    ctx.detectors()
        .iter()
        .map(|&kind| {
            let t = thresholds
                .get(setup.spec.noise_kind, kind, doppler_bin)
                .ok_or_else(|| AppError::Config(format!("{kind} is not calibrated for bin {doppler_bin}")))?;
            let hits = column(&stats, kind).iter().filter(|&&s| s > t.result.threshold).count();
            Ok(PfaCheck {
                detector: kind,
                scenario: setup.spec.noise_kind,
                doppler_bin,
                threshold: t.result.threshold,
                target_pfa: t.result.target_pfa,
                empirical_pfa: hits as f64 / n_trials as f64,
                n_trials,
                seed: setup.spec.seed,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdPoint {
    pub snr_db: f64,
    pub pd: f64,
    pub ci_halfwidth: f64,
    pub n_trials: usize,
}

/// `1.96 sqrt(pd (1 - pd) / n)`
pub fn ci_halfwidth(pd: f64, n: usize) -> f64 {
    1.96 * (pd * (1.0 - pd) / n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdCurve {
    pub detector: DetectorKind,
    pub scenario: NoiseKind,
    pub doppler_bin: usize,
    pub pfa_target: f64,
    /// From the H0 stream run alongside the curve.
    pub pfa_empirical: f64,
    pub threshold: f64,
    pub seed: u64,
    pub points: Vec<PdPoint>,
}

impl PdCurve {
    pub fn pd_at(&self, snr_db: f64) -> Option<&PdPoint> {
        self.points.iter().find(|p| p.snr_db == snr_db)
    }

    pub fn pfa_check(&self) -> PfaCheck {
        PfaCheck {
            detector: self.detector,
            scenario: self.scenario,
            doppler_bin: self.doppler_bin,
            threshold: self.threshold,
            target_pfa: self.pfa_target,
            empirical_pfa: self.pfa_empirical,
            n_trials: self.points.first().map_or(0, |p| p.n_trials),
            seed: self.seed,
        }
    }
}

/// Pd over `spec.snr_db` at one Doppler bin for every detector, plus the
/// embedded H0 false-alarm estimate from `n_trials` fresh trials.
///
/// Each H1 trial reuses its phase, disturbance and secondary data across the
/// SNR grid (common random numbers); trials are independent of each other.
pub fn run_pd_curve(setup: &Setup<'_>, thresholds: &Thresholds, doppler_bin: usize, n_trials: usize) -> Result<Vec<PdCurve>> {
    if n_trials == 0 {
        return Err(AppError::Config("trials must be positive".into()));
    }
    let grid = &setup.spec.snr_db;
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(AppError::Config("SNR grid must be strictly increasing".into()));
    }
    let ctx = setup.context(doppler_bin, setup.detectors)?;
    let kind = setup.spec.noise_kind;
    let lambdas: Vec<f64> = ctx
        .detectors()
        .iter()
        .map(|&k| thresholds.value(kind, k, doppler_bin))
        .collect::<Result<_>>()?;
    let pfa = empirical_pfa(setup, thresholds, doppler_bin, n_trials)?;

    let spec = ctx.simulator().spec();
    let (seed, h1_tag) = (spec.seed, tag(tags::PD_H1, spec));
    let dets = ctx.detectors().to_vec();
    let hits_per_trial = par_trials(n_trials, |i| {
        let sweep = ctx.h1_sweep(grid, &mut RadarRng::substream(seed, h1_tag, i))?;
        let mut hits = vec![false; dets.len() * grid.len()];
        for (g, s) in sweep.iter().enumerate() {
            for (k, &det) in dets.iter().enumerate() {
                hits[k * grid.len() + g] = s.get(det).is_some_and(|v| v > lambdas[k]);
            }
        }
        Ok(hits)
    })?;
    let mut counts = vec![0usize; dets.len() * grid.len()];
    for hits in &hits_per_trial {
        for (c, h) in counts.iter_mut().zip(hits) {
            *c += usize::from(*h);
        }
    }

    Ok(dets
        .iter()
        .enumerate()
        .map(|(k, &det)| {
            let check = pfa.iter().find(|c| c.detector == det).expect("every detector checked");
            PdCurve {
                detector: det,
                scenario: kind,
                doppler_bin,
                pfa_target: check.target_pfa,
                pfa_empirical: check.empirical_pfa,
                threshold: lambdas[k],
                seed: spec.seed,
                points: grid
                    .iter()
                    .enumerate()
                    .map(|(g, &snr_db)| {
                        let pd = counts[k * grid.len() + g] as f64 / n_trials as f64;
                        PdPoint {
                            snr_db,
                            pd,
                            ci_halfwidth: ci_halfwidth(pd, n_trials),
                            n_trials,
                        }
                    })
                    .collect(),
            }
        })
        .collect())
}

/// Pd over the (Doppler bin, SNR) lattice for one detector.
#[derive(Debug, Clone, PartialEq)]
pub struct DopplerMap {
    pub detector: DetectorKind,
    pub scenario: NoiseKind,
    pub snr_db: Vec<f64>,
    /// `pd[d][snr index]`
    pub pd: Vec<Vec<f64>>,
    pub ci_halfwidth: Vec<Vec<f64>>,
}

/// [`run_pd_curve`] at every bin `0..m`; returns the maps and the raw curves.
pub fn run_doppler_map(setup: &Setup<'_>, thresholds: &Thresholds, n_trials: usize) -> Result<(Vec<DopplerMap>, Vec<PdCurve>)> {
    let mut curves = Vec::new();
    for d in 0..setup.spec.m {
        curves.extend(run_pd_curve(setup, thresholds, d, n_trials)?);
    }
    let mut dets: Vec<DetectorKind> = setup.detectors.to_vec();
    dets.sort_by_key(|d| d.index());
    dets.dedup();
    let maps = dets
        .iter()
        .map(|&det| {
            let mine: Vec<&PdCurve> = curves.iter().filter(|c| c.detector == det).collect();
            DopplerMap {
                detector: det,
                scenario: setup.spec.noise_kind,
                snr_db: setup.spec.snr_db.clone(),
                pd: mine.iter().map(|c| c.points.iter().map(|p| p.pd).collect()).collect(),
                ci_halfwidth: mine.iter().map(|c| c.points.iter().map(|p| p.ci_halfwidth).collect()).collect(),
            }
        })
        .collect();
    Ok((maps, curves))
}

/// Binned VAE scores under H0 and under H1 at several SNRs.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreHistograms {
    pub scenario: NoiseKind,
    /// `bins + 1` edges; the last bin also holds everything above the top edge.
    pub edges: Vec<f64>,
    pub h0: Vec<f64>,
    /// `(snr_db, probability mass per bin)`
    pub h1: Vec<(f64, Vec<f64>)>,
    pub h0_scores: Vec<f64>,
    pub h1_scores: Vec<Vec<f64>>,
}

impl ScoreHistograms {
    /// `Σ_i min(p0_i, p1_i)` for each SNR entry.
    pub fn overlaps(&self) -> Vec<(f64, f64)> {
        self.h1
            .iter()
            .map(|(snr, p1)| (*snr, self.h0.iter().zip(p1).map(|(a, b)| a.min(*b)).sum()))
            .collect()
    }
}

fn bin_masses(scores: &[f64], edges: &[f64]) -> Vec<f64> {
    let bins = edges.len() - 1;
    let (lo, hi) = (edges[0], edges[bins]);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &s in scores {
        let b = (((s - lo) / width).floor().max(0.0) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts.iter().map(|&c| c as f64 / scores.len() as f64).collect()
}

/// VAE reconstruction-error histograms. H1 trials share phase and
/// disturbance across `snr_list`.
pub fn run_histogram(
    params: &VaeParams,
    spec: &ScenarioSpec,
    snr_list: &[f64],
    n_samples: usize,
    bins: usize,
) -> Result<ScoreHistograms> {
    if bins == 0 || n_samples == 0 || snr_list.is_empty() {
        return Err(AppError::Config("histogram needs bins, samples and at least one SNR".into()));
    }
    let setup = Setup {
        spec,
        detectors: &[DetectorKind::Vae],
        vae: Some(params),
        estimator: EstimatorConfig::default(),
    };
    let ctx = setup.context(spec.doppler_bin, &[DetectorKind::Vae])?;
    let h0_scores = column(&collect_h0(&ctx, tags::HISTOGRAM_H0, n_samples)?, DetectorKind::Vae);
    let (seed, h1_tag) = (spec.seed, tag(tags::HISTOGRAM_H1, spec));
    let sweeps = par_trials(n_samples, |i| ctx.h1_sweep(snr_list, &mut RadarRng::substream(seed, h1_tag, i)))?;
    let h1_scores: Vec<Vec<f64>> = (0..snr_list.len())
        .map(|g| sweeps.iter().filter_map(|s| s[g].get(DetectorKind::Vae)).collect())
        .collect();

    // Common support: zero to the 99.9th percentile of all scores pooled.
    let mut pooled: Vec<f64> = h0_scores.iter().chain(h1_scores.iter().flatten()).copied().collect();
    pooled.sort_unstable_by(f64::total_cmp);
    let top = pooled[((pooled.len() as f64 * 0.999) as usize).min(pooled.len() - 1)].max(f64::MIN_POSITIVE);
    let edges: Vec<f64> = (0..=bins).map(|i| top * i as f64 / bins as f64).collect();
    Ok(ScoreHistograms {
        scenario: spec.noise_kind,
        h0: bin_masses(&h0_scores, &edges),
        h1: snr_list
            .iter()
            .zip(&h1_scores)
            .map(|(&snr, s)| (snr, bin_masses(s, &edges)))
            .collect(),
        edges,
        h0_scores,
        h1_scores,
    })
}
