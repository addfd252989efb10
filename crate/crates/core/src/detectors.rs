//! Matched-filter family of test statistics.
//!
//! With `Σ` the (true or estimated) noise covariance and `p` the steering
//! vector:
//!
//! * MF:  `|p^H Σ^{-1} z|^2 / (p^H Σ^{-1} p)`
//! * NMF: `|p^H Σ^{-1} z|^2 / ((p^H Σ^{-1} p)(z^H Σ^{-1} z))`
//!
//! The adaptive variants plug in the SCM (AMF-SCM, ANMF-SCM) or Tyler's
//! estimate (ANMF-FP) built from secondary data.

use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::estimators::{scm, tyler_fp, EstimatorConfig};
use crate::linalg::{Cholesky, ComplexVec, HermitianMat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DetectorKind {
    Mf,
    Nmf,
    AmfScm,
    AnmfScm,
    AnmfFp,
    Vae,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 6] = [
        DetectorKind::Mf,
        DetectorKind::Nmf,
        DetectorKind::AmfScm,
        DetectorKind::AnmfScm,
        DetectorKind::AnmfFp,
        DetectorKind::Vae,
    ];

    pub fn id(self) -> &'static str {
        match self {
            DetectorKind::Mf => "mf",
            DetectorKind::Nmf => "nmf",
            DetectorKind::AmfScm => "amf_scm",
            DetectorKind::AnmfScm => "anmf_scm",
            DetectorKind::AnmfFp => "anmf_fp",
            DetectorKind::Vae => "vae",
        }
    }

    /// Needs fresh secondary data every trial.
    pub fn is_adaptive(self) -> bool {
        matches!(
            self,
            DetectorKind::AmfScm | DetectorKind::AnmfScm | DetectorKind::AnmfFp
        )
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        DetectorKind::ALL
            .into_iter()
            .find(|d| d.id() == norm)
            .ok_or(Error::invalid(
                "detector",
                "expected mf, nmf, amf_scm, anmf_scm, anmf_fp or vae",
            ))
    }
}

/// Statistic, threshold and the strict-inequality decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorOutput {
    pub statistic: f64,
    pub threshold: f64,
    pub decision: bool,
}

impl DetectorOutput {
    pub fn new(statistic: f64, threshold: f64) -> Self {
        Self {
            statistic,
            threshold,
            decision: statistic > threshold,
        }
    }
}

/// A covariance factorized once, with `L^{-1} p` and `p^H Σ^{-1} p` cached so
/// MF and NMF cost one triangular solve each.
#[derive(Debug, Clone)]
pub struct Whitener {
    chol: Cholesky,
    wp: ComplexVec,
    ppp: f64,
}

impl Whitener {
    pub fn new(sigma: &HermitianMat, p: &ComplexVec) -> Result<Self> {
        Self::from_cholesky(sigma.cholesky()?, p)
    }

    pub fn from_cholesky(chol: Cholesky, p: &ComplexVec) -> Result<Self> {
        let wp = chol.whiten(p)?;
        let ppp = wp.norm_sqr();
        Ok(Self { chol, wp, ppp })
    }

    /// `p^H Σ^{-1} p`
    pub fn steering_power(&self) -> f64 {
        self.ppp
    }

    /// `(|p^H Σ^{-1} z|^2, z^H Σ^{-1} z)`
    fn terms(&self, z: &ComplexVec) -> Result<(f64, f64)> {
        let wz = self.chol.whiten(z)?;
        Ok((self.wp.inner(&wz).norm_sqr(), wz.norm_sqr()))
    }

    pub fn mf(&self, z: &ComplexVec) -> Result<f64> {
        Ok(self.terms(z)?.0 / self.ppp)
    }

    pub fn nmf(&self, z: &ComplexVec) -> Result<f64> {
        let (num, zz) = self.terms(z)?;
        if zz == 0.0 {
            return Err(Error::DegenerateSnapshot);
        }
        Ok((num / (self.ppp * zz)).min(1.0))
    }

    /// Both statistics from a single whitening of `z`.
    pub fn mf_nmf(&self, z: &ComplexVec) -> Result<(f64, f64)> {
        let (num, zz) = self.terms(z)?;
        if zz == 0.0 {
            return Err(Error::DegenerateSnapshot);
        }
        Ok((num / self.ppp, (num / (self.ppp * zz)).min(1.0)))
    }
}

pub fn mf_statistic(z: &ComplexVec, p: &ComplexVec, sigma: &HermitianMat) -> Result<f64> {
    Whitener::new(sigma, p)?.mf(z)
}

pub fn nmf_statistic(z: &ComplexVec, p: &ComplexVec, sigma: &HermitianMat) -> Result<f64> {
    Whitener::new(sigma, p)?.nmf(z)
}

pub fn amf_scm(z: &ComplexVec, p: &ComplexVec, secondary: &[ComplexVec]) -> Result<f64> {
    mf_statistic(z, p, &scm(secondary)?)
}

pub fn anmf_scm(z: &ComplexVec, p: &ComplexVec, secondary: &[ComplexVec]) -> Result<f64> {
    nmf_statistic(z, p, &scm(secondary)?)
}

pub fn anmf_fp(
    z: &ComplexVec,
    p: &ComplexVec,
    secondary: &[ComplexVec],
    cfg: &EstimatorConfig,
) -> Result<f64> {
    nmf_statistic(z, p, &tyler_fp(secondary, cfg)?)
}
