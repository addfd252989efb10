//! Covariance estimation from secondary data.

use alloc::vec;

use crate::error::{Error, Result};
use crate::linalg::{ComplexVec, HermitianMat, C64};

/// Iteration controls for Tyler's fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    /// Stop once `||f(Σ) - Σ||_F / ||Σ||_F < tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Rescale every iterate to trace m.
    pub normalize_trace: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            normalize_trace: true,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::invalid("tol", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter", "must be at least 1"));
        }
        Ok(())
    }
}

fn check_data(data: &[ComplexVec]) -> Result<usize> {
    let first = data.first().ok_or(Error::Empty("secondary data"))?;
    let m = first.len();
    for z in data {
        if z.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: z.len(),
            });
        }
    }
    Ok(m)
}

/// Accumulate `w * z z^H` into the upper triangle of `acc`.
#[inline]
fn add_outer_upper(acc: &mut [C64], z: &[C64], w: f64) {
    let m = z.len();
    for i in 0..m {
        let zi = z[i] * w;
        let row = &mut acc[i * m..(i + 1) * m];
        for j in i..m {
            row[j] += zi * z[j].conj();
        }
    }
}

fn mirror_upper(acc: &mut [C64], m: usize) {
    for i in 0..m {
        acc[i * m + i].im = 0.0;
        for j in (i + 1)..m {
            acc[j * m + i] = acc[i * m + j].conj();
        }
    }
}

/// Sample covariance matrix `(1/K) Σ z_k z_k^H`.
pub fn scm(data: &[ComplexVec]) -> Result<HermitianMat> {
    let m = check_data(data)?;
    let mut acc = vec![C64::new(0.0, 0.0); m * m];
    let w = 1.0 / data.len() as f64;
    for z in data {
        add_outer_upper(&mut acc, z.as_slice(), w);
    }
    mirror_upper(&mut acc, m);
    Ok(HermitianMat::from_hermitian_raw(m, acc))
}

/// Tyler estimate plus convergence diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TylerEstimate {
    pub sigma: HermitianMat,
    pub iterations: usize,
    /// Relative fixed-point residual of `sigma`.
    pub residual: f64,
}

/// Tyler's fixed point `Σ = (m/K) Σ_k z_k z_k^H / (z_k^H Σ^{-1} z_k)`,
/// iterated from the identity.
pub fn tyler_fp(data: &[ComplexVec], cfg: &EstimatorConfig) -> Result<HermitianMat> {
    tyler_fp_detailed(data, cfg).map(|t| t.sigma)
}

pub fn tyler_fp_detailed(data: &[ComplexVec], cfg: &EstimatorConfig) -> Result<TylerEstimate> {
    cfg.validate()?;
    let m = check_data(data)?;
    if data.iter().any(|z| z.norm_sqr() == 0.0) {
        return Err(Error::DegenerateSnapshot);
    }
    let scale = m as f64 / data.len() as f64;
    let mut sigma = HermitianMat::identity(m);
    let mut w = vec![C64::new(0.0, 0.0); m];
    let mut residual = f64::INFINITY;

    for iter in 1..=cfg.max_iter {
        let chol = sigma.cholesky()?;
        let mut next = vec![C64::new(0.0, 0.0); m * m];
        for z in data {
            w.copy_from_slice(z.as_slice());
            chol.forward_in_place(&mut w);
            let q: f64 = w.iter().map(|c| c.norm_sqr()).sum();
            add_outer_upper(&mut next, z.as_slice(), scale / q);
        }
        mirror_upper(&mut next, m);
        let mapped = HermitianMat::from_hermitian_raw(m, next);

        residual = mapped.distance(&sigma) / sigma.frobenius_norm();
        if !residual.is_finite() {
            return Err(Error::NonFinite("Tyler iterate"));
        }
        if residual < cfg.tol {
            return Ok(TylerEstimate {
                sigma,
                iterations: iter,
                residual,
            });
        }
        sigma = mapped;
        if cfg.normalize_trace {
            let tr = sigma.trace();
            sigma.scale(m as f64 / tr);
        }
    }
    Err(Error::NoConvergence {
        iterations: cfg.max_iter,
        residual,
    })
}

/// Relative fixed-point residual `||Σ - f(Σ)||_F / ||Σ||_F` of any candidate.
pub fn tyler_residual(data: &[ComplexVec], sigma: &HermitianMat) -> Result<f64> {
    let m = check_data(data)?;
    let chol = sigma.cholesky()?;
    let scale = m as f64 / data.len() as f64;
    let mut acc = vec![C64::new(0.0, 0.0); m * m];
    for z in data {
        let q = chol.quad_form_self(z)?;
        add_outer_upper(&mut acc, z.as_slice(), scale / q);
    }
    mirror_upper(&mut acc, m);
    let mapped = HermitianMat::from_hermitian_raw(m, acc);
    Ok(mapped.distance(sigma) / sigma.frobenius_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::toeplitz;
    use crate::rng::RadarRng;
    use crate::scenario::sample_complex_gaussian;
    use std::vec::Vec;

    fn e(m: usize, i: usize) -> ComplexVec {
        let mut v = ComplexVec::zeros(m);
        v[i] = C64::new(1.0, 0.0);
        v
    }

    fn gaussian(cov: &HermitianMat, n: usize, seed: u64) -> Vec<ComplexVec> {
        let mut r = RadarRng::substream(seed, 0, 0);
        (0..n).map(|_| sample_complex_gaussian(cov, &mut r).unwrap()).collect()
    }

    #[test]
    fn scm_examples() {
        let s = scm(&[e(2, 0), e(2, 1)]).unwrap();
        assert_eq!(s, HermitianMat::scaled_identity(2, 0.5));
        let s = scm(&[e(3, 0), e(3, 0), e(3, 0)]).unwrap();
        let want = HermitianMat::from_fn(3, |i, j| {
            C64::new(if i == 0 && j == 0 { 1.0 } else { 0.0 }, 0.0)
        })
        .unwrap();
        assert_eq!(s, want);
        assert!(scm(&[]).is_err());
    }

    #[test]
    fn scm_consistency() {
        let t = toeplitz(0.5, 8).unwrap();
        let s = scm(&gaussian(&t, 10_000, 1)).unwrap();
        for (a, b) in s.as_slice().iter().zip(t.as_slice()) {
            assert!((a - b).norm() < 0.05);
        }
    }

    #[test]
    fn scm_is_exactly_hermitian() {
        let t = toeplitz(0.5, 6).unwrap();
        let s = scm(&gaussian(&t, 40, 2)).unwrap();
        for i in 0..6 {
            assert_eq!(s.get(i, i).im, 0.0);
            for j in 0..6 {
                assert_eq!(s.get(i, j), s.get(j, i).conj());
            }
        }
    }

    #[test]
    fn tyler_orthonormal_pair_is_identity() {
        let est = tyler_fp_detailed(&[e(2, 0), e(2, 1)], &EstimatorConfig::default()).unwrap();
        assert_eq!(est.sigma, HermitianMat::identity(2));
        assert_eq!(est.iterations, 1);
    }

    #[test]
    fn tyler_scale_invariance() {
        let t = toeplitz(0.5, 16).unwrap();
        let data = gaussian(&t, 32, 3);
        let cfg = EstimatorConfig::default();
        let base = tyler_fp(&data, &cfg).unwrap();
        let joint: Vec<ComplexVec> = data.iter().map(|z| z.scaled(C64::new(3.7, -1.2))).collect();
        assert!(tyler_fp(&joint, &cfg).unwrap().distance(&base) < 1e-10);
        let mut r = RadarRng::substream(4, 0, 0);
        let per: Vec<ComplexVec> = data
            .iter()
            .map(|z| z.scaled(C64::new(0.01 + 50.0 * r.uniform(), 0.0)))
            .collect();
        assert!(tyler_fp(&per, &cfg).unwrap().distance(&base) < 1e-10);
    }

    #[test]
    fn tyler_residual_below_tolerance() {
        let t = toeplitz(0.5, 16).unwrap();
        let cfg = EstimatorConfig::default();
        for seed in 0..10 {
            let data = gaussian(&t, 32, 10 + seed);
            let est = tyler_fp_detailed(&data, &cfg).unwrap();
            assert!(est.residual < cfg.tol);
            assert!(tyler_residual(&data, &est.sigma).unwrap() < cfg.tol);
            assert!(est.iterations <= 100, "{} iterations", est.iterations);
            assert!((est.sigma.trace() - 16.0).abs() < 1e-9);
        }
    }

    #[test]
    fn tyler_is_consistent_on_average() {
        // One K = 320 draw has entrywise standard error near 1/sqrt(K); the
        // mean over independent draws isolates the estimator's bias.
        let t = toeplitz(0.5, 16).unwrap();
        let cfg = EstimatorConfig::default();
        let reps = 40;
        let mut mean = vec![C64::new(0.0, 0.0); 256];
        for rep in 0..reps {
            let est = tyler_fp(&gaussian(&t, 320, 100 + rep), &cfg).unwrap();
            for (acc, v) in mean.iter_mut().zip(est.as_slice()) {
                *acc += v / reps as f64;
            }
        }
        let max_err = mean
            .iter()
            .zip(t.as_slice())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(max_err < 0.05, "{max_err}");
    }

    #[test]
    fn tyler_errors() {
        let cfg = EstimatorConfig::default();
        assert_eq!(
            tyler_fp(&[e(2, 0), ComplexVec::zeros(2)], &cfg),
            Err(Error::DegenerateSnapshot)
        );
        let t = toeplitz(0.5, 16).unwrap();
        let data = gaussian(&t, 32, 6);
        let tight = EstimatorConfig {
            max_iter: 2,
            ..cfg
        };
        assert!(matches!(tyler_fp(&data, &tight), Err(Error::NoConvergence { .. })));
        assert!(tyler_fp(&data, &EstimatorConfig { tol: 0.0, ..cfg }).is_err());
    }
}
