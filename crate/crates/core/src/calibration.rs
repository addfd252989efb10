//! PFA-targeted thresholds and the resulting binary detectors.

use alloc::vec::Vec;

use crate::detectors::{DetectorKind, DetectorOutput, Whitener};
use crate::error::{Error, Result};
use crate::estimators::{scm, tyler_fp, EstimatorConfig};
use crate::linalg::{ComplexVec, HermitianMat};
use crate::vae::{batch_input, VaeParams};

/// Smallest evaluation set accepted for `target_pfa` (ten expected exceedances).
pub fn min_eval_count(target_pfa: f64) -> usize {
    (10.0 / target_pfa - 1e-9).ceil() as usize
}

/// `sqrt(p (1 - p) / n)`
pub fn binomial_sigma(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn check_pfa(target_pfa: f64) -> Result<()> {
    if !(target_pfa > 0.0 && target_pfa < 1.0) {
        return Err(Error::invalid("target_pfa", "must lie in (0, 1)"));
    }
    Ok(())
}

/// Empirical `(1 - p)` quantile: the midpoint of order statistics
/// `floor(n (1 - p))` and the next one (1-based).
pub fn calibrate_threshold(scores: &[f64], target_pfa: f64) -> Result<f64> {
    check_pfa(target_pfa)?;
    let required = min_eval_count(target_pfa);
    if scores.len() < required {
        return Err(Error::InsufficientData {
            found: scores.len(),
            required,
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("calibration scores"));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let n = sorted.len();
    // The guard keeps e.g. 100 * 0.99 from landing just below 99.
    let k = ((n as f64) * (1.0 - target_pfa) + 1e-9).floor() as usize;
    let k = k.clamp(1, n - 1);
    Ok(0.5 * (sorted[k - 1] + sorted[k]))
}

/// Fraction of `scores` strictly above `threshold`.
pub fn exceedance_fraction(scores: &[f64], threshold: f64) -> f64 {
    if scores.is_empty() {
        return 0.0;
    }
    scores.iter().filter(|&&s| s > threshold).count() as f64 / scores.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub detector: DetectorKind,
    pub threshold: f64,
    pub target_pfa: f64,
    pub eval_count: usize,
    /// Exceedance rate on the calibration set itself.
    pub empirical_pfa: f64,
    pub seed: u64,
}

impl CalibrationResult {
    pub fn from_scores(detector: DetectorKind, scores: &[f64], target_pfa: f64, seed: u64) -> Result<Self> {
        let threshold = calibrate_threshold(scores, target_pfa)?;
        Ok(Self {
            detector,
            threshold,
            target_pfa,
            eval_count: scores.len(),
            empirical_pfa: exceedance_fraction(scores, threshold),
            seed,
        })
    }

    /// `target ± k σ` with σ the binomial standard error at `n` trials.
    pub fn within_sigma(&self, pfa: f64, n: usize, k: f64) -> bool {
        (pfa - self.target_pfa).abs() <= k * binomial_sigma(self.target_pfa, n)
    }
}

/// Reconstruction error `||input - decode(mu)||^2` in eval mode.
pub fn vae_score(params: &VaeParams, z: &ComplexVec) -> Result<f64> {
    Ok(vae_scores(params, core::slice::from_ref(z))?[0])
}

/// Batched [`vae_score`]; scores do not depend on batch composition.
pub fn vae_scores(params: &VaeParams, zs: &[ComplexVec]) -> Result<Vec<f64>> {
    if zs.iter().any(|z| z.len() != params.arch.m) {
        return Err(Error::DimensionMismatch {
            expected: params.arch.m,
            found: zs.iter().map(ComplexVec::len).find(|&l| l != params.arch.m).unwrap_or(0),
        });
    }
    let mut out = Vec::with_capacity(zs.len());
    for chunk in zs.chunks(256) {
        let refs: Vec<&ComplexVec> = chunk.iter().collect();
        out.extend(params.reconstruction_errors(&batch_input(&refs, params.arch.input_mode))?);
    }
    Ok(out)
}

/// What a detector needs besides the primary snapshot.
#[derive(Debug, Clone, Copy)]
pub enum DetectionContext<'a> {
    /// Known covariance (MF, NMF).
    Known { sigma: &'a HermitianMat, p: &'a ComplexVec },
    /// Secondary data (AMF-SCM, ANMF-SCM, ANMF-FP).
    Secondary {
        data: &'a [ComplexVec],
        p: &'a ComplexVec,
        estimator: &'a EstimatorConfig,
    },
    Vae(&'a VaeParams),
}

/// `statistic > threshold` for one snapshot.
pub fn detect(kind: DetectorKind, z: &ComplexVec, threshold: f64, ctx: DetectionContext<'_>) -> Result<DetectorOutput> {
    let stat = match (kind, ctx) {
        (DetectorKind::Mf, DetectionContext::Known { sigma, p }) => Whitener::new(sigma, p)?.mf(z)?,
        (DetectorKind::Nmf, DetectionContext::Known { sigma, p }) => Whitener::new(sigma, p)?.nmf(z)?,
        (DetectorKind::AmfScm, DetectionContext::Secondary { data, p, .. }) => Whitener::new(&scm(data)?, p)?.mf(z)?,
        (DetectorKind::AnmfScm, DetectionContext::Secondary { data, p, .. }) => Whitener::new(&scm(data)?, p)?.nmf(z)?,
        (DetectorKind::AnmfFp, DetectionContext::Secondary { data, p, estimator }) => {
            Whitener::new(&tyler_fp(data, estimator)?, p)?.nmf(z)?
        }
        (DetectorKind::Vae, DetectionContext::Vae(params)) => vae_score(params, z)?,
        (DetectorKind::Vae, _) => return Err(Error::MissingModel("vae")),
        _ => return Err(Error::invalid("context", "does not match the detector")),
    };
    Ok(DetectorOutput::new(stat, threshold))
}
