//! Noise environments and targets.
//!
//! Three disturbance models over m-pulse snapshots, with `Σc = T(ρ)`:
//!
//! | kind        | H0 snapshot              |
//! |-------------|--------------------------|
//! | `CgnAwgn`   | `g + n`                  |
//! | `Ccgn`      | `sqrt(τ) g`              |
//! | `CcgnAwgn`  | `sqrt(τ) g + n`          |
//!
//! where `g ~ CN(0, Σc)`, `n ~ CN(0, σ² I)` with `σ² = Tr(Σc) / (m r)` and
//! `τ ~ Gamma(μ, 1/μ)` drawn independently per snapshot. Under H1 the target
//! `α p` is added with `α = sqrt(10^(snr/10)) e^{2jπφ} / sqrt(m)`, φ uniform.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{toeplitz, Cholesky, ComplexVec, HermitianMat, C64};
use crate::rng::{stream_tag, tags, RadarRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NoiseKind {
    /// Correlated Gaussian clutter plus white thermal noise.
    CgnAwgn,
    /// Correlated compound-Gaussian clutter only.
    Ccgn,
    /// Correlated compound-Gaussian clutter plus white thermal noise.
    CcgnAwgn,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 3] = [NoiseKind::CgnAwgn, NoiseKind::Ccgn, NoiseKind::CcgnAwgn];

    pub fn id(self) -> &'static str {
        match self {
            NoiseKind::CgnAwgn => "cgn_awgn",
            NoiseKind::Ccgn => "ccgn",
            NoiseKind::CcgnAwgn => "ccgn_awgn",
        }
    }

    pub fn has_texture(self) -> bool {
        matches!(self, NoiseKind::Ccgn | NoiseKind::CcgnAwgn)
    }

    pub fn has_thermal(self) -> bool {
        matches!(self, NoiseKind::CgnAwgn | NoiseKind::CcgnAwgn)
    }

    /// Stable small integer, used in stream tags and file formats.
    pub fn code(self) -> u32 {
        match self {
            NoiseKind::CgnAwgn => 0,
            NoiseKind::Ccgn => 1,
            NoiseKind::CcgnAwgn => 2,
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '+'], "_").as_str() {
            "cgn_awgn" => Ok(NoiseKind::CgnAwgn),
            "ccgn" => Ok(NoiseKind::Ccgn),
            "ccgn_awgn" => Ok(NoiseKind::CcgnAwgn),
            _ => Err(Error::invalid("noise_kind", "expected cgn_awgn, ccgn or ccgn_awgn")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    H0,
    H1,
}

impl Hypothesis {
    pub fn code(self) -> u8 {
        match self {
            Hypothesis::H0 => 0,
            Hypothesis::H1 => 1,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(Hypothesis::H0),
            1 => Some(Hypothesis::H1),
            _ => None,
        }
    }
}

/// One noise environment plus target geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub noise_kind: NoiseKind,
    pub m: usize,
    pub rho: f64,
    /// Gamma texture shape.
    pub mu: f64,
    /// Clutter-to-thermal power ratio `Tr(Σc) / (m σ²)`.
    pub r: f64,
    /// Number of secondary snapshots for adaptive detectors.
    pub k: usize,
    pub doppler_bin: usize,
    pub snr_db: Vec<f64>,
    pub seed: u64,
}

impl ScenarioSpec {
    /// m = 16, ρ = 0.5, μ = 1, r = 1, K = 2m, d = 0, SNR 0..=25 dB.
    pub fn standard(noise_kind: NoiseKind) -> Self {
        Self {
            noise_kind,
            m: 16,
            rho: 0.5,
            mu: 1.0,
            r: 1.0,
            k: 32,
            doppler_bin: 0,
            snr_db: (0..=25).map(f64::from).collect(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::invalid("m", "must be at least 2"));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::invalid("rho", "must lie in [0, 1)"));
        }
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::invalid("mu", "must be positive"));
        }
        if !(self.r > 0.0) || !self.r.is_finite() {
            return Err(Error::invalid("r", "must be positive"));
        }
        if self.doppler_bin >= self.m {
            return Err(Error::invalid("doppler_bin", "must be below m"));
        }
        if self.k < self.m {
            return Err(Error::invalid("k", "secondary count must be at least m"));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("snr_db", "grid values must be finite"));
        }
        Ok(())
    }

    pub fn with_doppler(&self, d: usize) -> Self {
        Self {
            doppler_bin: d,
            ..self.clone()
        }
    }

    /// Thermal variance `Tr(Σc) / (m r)`; Σc has unit diagonal so this is `1 / r`.
    pub fn thermal_variance(&self) -> f64 {
        1.0 / self.r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub z: ComplexVec,
    pub hypothesis: Hypothesis,
    /// Clutter texture τ, present iff the noise model is compound.
    pub texture: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetSpec {
    pub alpha: C64,
    pub snr_linear: f64,
}

/// `p_k = exp(2jπ d k / m)`, k = 0..m-1.
pub fn steering_vector(d: usize, m: usize) -> Result<ComplexVec> {
    if m == 0 {
        return Err(Error::invalid("m", "must be at least 1"));
    }
    if d >= m {
        return Err(Error::invalid("doppler_bin", "must be below m"));
    }
    let data = (0..m)
        .map(|k| {
            // Reduce the phase index modulo m first to keep it exact.
            let idx = (d * k) % m;
            C64::from_polar(1.0, 2.0 * PI * idx as f64 / m as f64)
        })
        .collect();
    Ok(ComplexVec::from_raw(data))
}

/// `α = sqrt(10^(snr_db/10)) e^{2jπφ} / sqrt(m)`.
pub fn target_amplitude(snr_db: f64, phi: f64, m: usize) -> C64 {
    let snr = 10f64.powf(snr_db / 10.0);
    C64::from_polar(snr.sqrt() / (m as f64).sqrt(), 2.0 * PI * phi)
}

pub fn target(snr_db: f64, phi: f64, m: usize) -> TargetSpec {
    TargetSpec {
        alpha: target_amplitude(snr_db, phi, m),
        snr_linear: 10f64.powf(snr_db / 10.0),
    }
}

/// `L u` with `L = chol(cov)` and `u` i.i.d. CN(0, 1).
pub fn sample_complex_gaussian(cov: &HermitianMat, rng: &mut RadarRng) -> Result<ComplexVec> {
    let chol = cov.cholesky()?;
    let mut out = ComplexVec::zeros(cov.dim());
    color_into(&chol, rng, out.as_mut_slice());
    Ok(out)
}

fn color_into(chol: &Cholesky, rng: &mut RadarRng, out: &mut [C64]) {
    let mut u = [C64::new(0.0, 0.0); 64];
    let m = chol.dim();
    if m <= u.len() {
        for x in &mut u[..m] {
            *x = rng.complex_normal();
        }
        chol.mul_lower(&u[..m], out);
    } else {
        let w: Vec<C64> = (0..m).map(|_| rng.complex_normal()).collect();
        chol.mul_lower(&w, out);
    }
}

/// τ ~ Gamma(shape μ, scale 1/μ): unit mean, variance 1/μ.
pub fn sample_texture(mu: f64, rng: &mut RadarRng) -> f64 {
    rng.gamma(mu) / mu
}

/// Precomputed generator for one scenario.
#[derive(Debug, Clone)]
pub struct Simulator {
    spec: ScenarioSpec,
    clutter: Cholesky,
    clutter_cov: HermitianMat,
    sigma: f64,
    steering: ComplexVec,
}

impl Simulator {
    pub fn new(spec: &ScenarioSpec) -> Result<Self> {
        spec.validate()?;
        let clutter_cov = toeplitz(spec.rho, spec.m)?;
        let clutter = clutter_cov.cholesky()?;
        let sigma2 = clutter_cov.trace() / (spec.m as f64 * spec.r);
        Ok(Self {
            spec: spec.clone(),
            clutter,
            clutter_cov,
            sigma: sigma2.sqrt(),
            steering: steering_vector(spec.doppler_bin, spec.m)?,
        })
    }

    pub fn spec(&self) -> &ScenarioSpec {
        &self.spec
    }

    pub fn m(&self) -> usize {
        self.spec.m
    }

    pub fn steering(&self) -> &ComplexVec {
        &self.steering
    }

    /// Same noise model, different Doppler bin.
    pub fn with_doppler(&self, d: usize) -> Result<Self> {
        Ok(Self {
            spec: self.spec.with_doppler(d),
            steering: steering_vector(d, self.spec.m)?,
            ..self.clone()
        })
    }

    pub fn clutter_covariance(&self) -> &HermitianMat {
        &self.clutter_cov
    }

    pub fn thermal_variance(&self) -> f64 {
        if self.spec.noise_kind.has_thermal() {
            self.sigma * self.sigma
        } else {
            0.0
        }
    }

    /// Unconditional noise covariance `Σc + σ² I` (or `Σc` without thermal noise).
    pub fn clairvoyant_covariance(&self) -> HermitianMat {
        self.clutter_cov.add_diagonal(self.thermal_variance())
    }

    /// One target-free disturbance draw: texture, clutter, thermal noise.
    pub fn noise(&self, rng: &mut RadarRng) -> (ComplexVec, Option<f64>) {
        let m = self.spec.m;
        let kind = self.spec.noise_kind;
        let texture = kind.has_texture().then(|| sample_texture(self.spec.mu, rng));
        let mut z = ComplexVec::zeros(m);
        color_into(&self.clutter, rng, z.as_mut_slice());
        if let Some(tau) = texture {
            let s = tau.sqrt();
            for c in z.as_mut_slice() {
                *c *= s;
            }
        }
        if kind.has_thermal() {
            for c in z.as_mut_slice() {
                *c += rng.complex_normal() * self.sigma;
            }
        }
        (z, texture)
    }

    /// Snapshot with an explicit target phase φ (ignored under H0).
    pub fn snapshot_with_phase(
        &self,
        hypothesis: Hypothesis,
        snr_db: f64,
        phi: f64,
        rng: &mut RadarRng,
    ) -> Snapshot {
        let (mut z, texture) = self.noise(rng);
        if hypothesis == Hypothesis::H1 {
            self.add_target(&mut z, target_amplitude(snr_db, phi, self.spec.m));
        }
        Snapshot {
            z,
            hypothesis,
            texture,
        }
    }

    /// Snapshot with φ ~ U[0, 1] drawn first from `rng` under H1.
    pub fn snapshot(&self, hypothesis: Hypothesis, snr_db: f64, rng: &mut RadarRng) -> Snapshot {
        let phi = match hypothesis {
            Hypothesis::H0 => 0.0,
            Hypothesis::H1 => rng.uniform(),
        };
        self.snapshot_with_phase(hypothesis, snr_db, phi, rng)
    }

    pub fn add_target(&self, z: &mut ComplexVec, alpha: C64) {
        for (c, p) in z.as_mut_slice().iter_mut().zip(self.steering.as_slice()) {
            *c += alpha * p;
        }
    }

    /// K independent target-free snapshots, each with its own texture.
    pub fn secondary(&self, rng: &mut RadarRng) -> Vec<ComplexVec> {
        (0..self.spec.k).map(|_| self.noise(rng).0).collect()
    }
}

pub fn generate_snapshot(
    spec: &ScenarioSpec,
    hypothesis: Hypothesis,
    snr_db: f64,
    rng: &mut RadarRng,
) -> Result<Snapshot> {
    Ok(Simulator::new(spec)?.snapshot(hypothesis, snr_db, rng))
}

/// Stream tag used for dataset generation of a given scenario and hypothesis.
pub fn dataset_tag(kind: NoiseKind, hypothesis: Hypothesis, purpose: u32) -> u64 {
    stream_tag(
        purpose,
        (kind.code() << 8) | u32::from(hypothesis.code()),
    )
}

/// `count` i.i.d. snapshots; snapshot `i` is drawn from substream
/// `(spec.seed, tag, i)` so the dataset is a pure function of its inputs.
pub fn generate_dataset(
    spec: &ScenarioSpec,
    hypothesis: Hypothesis,
    snr_db: f64,
    count: usize,
    tag: u64,
) -> Result<Vec<Snapshot>> {
    if count == 0 {
        return Err(Error::Empty("dataset count"));
    }
    let sim = Simulator::new(spec)?;
    Ok((0..count as u64)
        .map(|i| {
            let mut rng = RadarRng::substream(spec.seed, tag, i);
            sim.snapshot(hypothesis, snr_db, &mut rng)
        })
        .collect())
}

/// Default-tag dataset for `spec.noise_kind` and `hypothesis`.
pub fn generate_dataset_default(
    spec: &ScenarioSpec,
    hypothesis: Hypothesis,
    snr_db: f64,
    count: usize,
) -> Result<Vec<Snapshot>> {
    generate_dataset(
        spec,
        hypothesis,
        snr_db,
        count,
        dataset_tag(spec.noise_kind, hypothesis, tags::DATASET),
    )
}

/// K target-free secondary snapshots (K ≥ m enforced).
pub fn generate_secondary(spec: &ScenarioSpec, rng: &mut RadarRng) -> Result<Vec<Snapshot>> {
    let sim = Simulator::new(spec)?;
    Ok((0..spec.k)
        .map(|_| {
            let (z, texture) = sim.noise(rng);
            Snapshot {
                z,
                hypothesis: Hypothesis::H0,
                texture,
            }
        })
        .collect())
}
