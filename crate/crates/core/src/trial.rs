//! One Monte Carlo trial: a primary snapshot, its secondary data, and every
//! requested detector statistic computed from the same draw.
//!
//! Draw order inside a trial stream: target phase (H1 only), primary
//! disturbance (texture, clutter, thermal), then the K secondary snapshots.
//! Under H1 the disturbance and phase do not depend on the SNR, so a sweep
//! over the SNR grid reuses them and only rescales the target amplitude.

use alloc::vec::Vec;

use crate::calibration::vae_scores;
use crate::detectors::{DetectorKind, Whitener};
use crate::error::{Error, Result};
use crate::estimators::{scm, tyler_fp, EstimatorConfig};
use crate::linalg::ComplexVec;
use crate::rng::RadarRng;
use crate::scenario::{target_amplitude, Simulator};
use crate::vae::VaeParams;

/// Statistics from one snapshot, indexed by [`DetectorKind::index`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Statistics([Option<f64>; 6]);

impl Statistics {
    pub fn get(&self, kind: DetectorKind) -> Option<f64> {
        self.0[kind.index()]
    }

    pub fn set(&mut self, kind: DetectorKind, v: f64) {
        self.0[kind.index()] = Some(v);
    }
}

/// Everything fixed across trials for one scenario and Doppler bin.
#[derive(Debug, Clone)]
pub struct TrialContext<'a> {
    sim: Simulator,
    known: Whitener,
    detectors: Vec<DetectorKind>,
    vae: Option<&'a VaeParams>,
    estimator: EstimatorConfig,
}

/// Estimator-dependent whiteners built from one secondary set.
struct Adaptive {
    scm: Option<Whitener>,
    fp: Option<Whitener>,
}

impl<'a> TrialContext<'a> {
    pub fn new(
        sim: Simulator,
        detectors: &[DetectorKind],
        vae: Option<&'a VaeParams>,
        estimator: EstimatorConfig,
    ) -> Result<Self> {
        if detectors.is_empty() {
            return Err(Error::Empty("detector list"));
        }
        if detectors.contains(&DetectorKind::Vae) {
            let params = vae.ok_or(Error::MissingModel("vae"))?;
            if params.arch.m != sim.m() {
                return Err(Error::DimensionMismatch {
                    expected: sim.m(),
                    found: params.arch.m,
                });
            }
        }
        estimator.validate()?;
        let known = Whitener::new(&sim.clairvoyant_covariance(), sim.steering())?;
        let mut detectors = detectors.to_vec();
        detectors.sort_by_key(|d| d.index());
        detectors.dedup();
        Ok(Self {
            sim,
            known,
            detectors,
            vae,
            estimator,
        })
    }

    pub fn simulator(&self) -> &Simulator {
        &self.sim
    }

    pub fn detectors(&self) -> &[DetectorKind] {
        &self.detectors
    }

    fn wants(&self, kind: DetectorKind) -> bool {
        self.detectors.contains(&kind)
    }

    fn needs_secondary(&self) -> bool {
        self.detectors.iter().any(|d| d.is_adaptive())
    }

    fn adaptive(&self, rng: &mut RadarRng) -> Result<Adaptive> {
        if !self.needs_secondary() {
            return Ok(Adaptive { scm: None, fp: None });
        }
        let secondary = self.sim.secondary(rng);
        let p = self.sim.steering();
        let scm = if self.wants(DetectorKind::AmfScm) || self.wants(DetectorKind::AnmfScm) {
            Some(Whitener::new(&scm(&secondary)?, p)?)
        } else {
            None
        };
        let fp = if self.wants(DetectorKind::AnmfFp) {
            Some(Whitener::new(&tyler_fp(&secondary, &self.estimator)?, p)?)
        } else {
            None
        };
        Ok(Adaptive { scm, fp })
    }

    fn classical(&self, z: &ComplexVec, a: &Adaptive) -> Result<Statistics> {
        let mut s = Statistics::default();
        if self.wants(DetectorKind::Mf) || self.wants(DetectorKind::Nmf) {
            let (mf, nmf) = self.known.mf_nmf(z)?;
            s.set(DetectorKind::Mf, mf);
            s.set(DetectorKind::Nmf, nmf);
        }
        if let Some(w) = &a.scm {
            let (mf, nmf) = w.mf_nmf(z)?;
            s.set(DetectorKind::AmfScm, mf);
            s.set(DetectorKind::AnmfScm, nmf);
        }
        if let Some(w) = &a.fp {
            s.set(DetectorKind::AnmfFp, w.nmf(z)?);
        }
        // Drop the ones that came along for free but were not asked for.
        for kind in DetectorKind::ALL {
            if !self.wants(kind) {
                s.0[kind.index()] = None;
            }
        }
        Ok(s)
    }

    fn with_vae(&self, zs: &[ComplexVec], stats: &mut [Statistics]) -> Result<()> {
        if let (true, Some(params)) = (self.wants(DetectorKind::Vae), self.vae) {
            for (s, v) in stats.iter_mut().zip(vae_scores(params, zs)?) {
                s.set(DetectorKind::Vae, v);
            }
        }
        Ok(())
    }

    /// Statistics for an externally supplied snapshot and secondary set.
    pub fn evaluate(&self, z: &ComplexVec, secondary: &[ComplexVec]) -> Result<Statistics> {
        let p = self.sim.steering();
        let a = Adaptive {
            scm: if self.wants(DetectorKind::AmfScm) || self.wants(DetectorKind::AnmfScm) {
                Some(Whitener::new(&scm(secondary)?, p)?)
            } else {
                None
            },
            fp: if self.wants(DetectorKind::AnmfFp) {
                Some(Whitener::new(&tyler_fp(secondary, &self.estimator)?, p)?)
            } else {
                None
            },
        };
        let mut s = [self.classical(z, &a)?];
        self.with_vae(core::slice::from_ref(z), &mut s)?;
        Ok(s[0])
    }

    /// One target-free trial.
    pub fn h0(&self, rng: &mut RadarRng) -> Result<Statistics> {
        let (z, _) = self.sim.noise(rng);
        let a = self.adaptive(rng)?;
        let mut s = [self.classical(&z, &a)?];
        self.with_vae(core::slice::from_ref(&z), &mut s)?;
        Ok(s[0])
    }

    /// One target-present trial evaluated at every SNR in `snr_db`, sharing
    /// phase, disturbance and secondary data across the grid.
    pub fn h1_sweep(&self, snr_db: &[f64], rng: &mut RadarRng) -> Result<Vec<Statistics>> {
        let phi = rng.uniform();
        let (noise, _) = self.sim.noise(rng);
        let a = self.adaptive(rng)?;
        let m = self.sim.m();
        let zs: Vec<ComplexVec> = snr_db
            .iter()
            .map(|&snr| {
                let mut z = noise.clone();
                self.sim.add_target(&mut z, target_amplitude(snr, phi, m));
                z
            })
            .collect();
        let mut stats = zs.iter().map(|z| self.classical(z, &a)).collect::<Result<Vec<_>>>()?;
        self.with_vae(&zs, &mut stats)?;
        Ok(stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::{amf_scm, anmf_fp, anmf_scm, mf_statistic, nmf_statistic};
    use crate::scenario::{Hypothesis, NoiseKind, ScenarioSpec};
    use crate::vae::VaeArch;

    #[test]
    fn h0_matches_direct_statistics() {
        let spec = ScenarioSpec::standard(NoiseKind::CcgnAwgn).with_doppler(3);
        let sim = Simulator::new(&spec).unwrap();
        let vae = VaeParams::init(VaeArch::default(), &mut RadarRng::substream(1, 1, 1)).unwrap();
        let ctx = TrialContext::new(sim.clone(), &DetectorKind::ALL, Some(&vae), EstimatorConfig::default()).unwrap();
        let s = ctx.h0(&mut RadarRng::substream(9, 9, 0)).unwrap();

        let mut r = RadarRng::substream(9, 9, 0);
        let (z, _) = sim.noise(&mut r);
        let sec = sim.secondary(&mut r);
        let sigma = sim.clairvoyant_covariance();
        let p = sim.steering();
        let cfg = EstimatorConfig::default();
        let close = |a: Option<f64>, b: f64| (a.unwrap() - b).abs() <= 1e-12 * b.abs().max(1.0);
        assert!(close(s.get(DetectorKind::Mf), mf_statistic(&z, p, &sigma).unwrap()));
        assert!(close(s.get(DetectorKind::Nmf), nmf_statistic(&z, p, &sigma).unwrap()));
        assert!(close(s.get(DetectorKind::AmfScm), amf_scm(&z, p, &sec).unwrap()));
        assert!(close(s.get(DetectorKind::AnmfScm), anmf_scm(&z, p, &sec).unwrap()));
        assert!(close(s.get(DetectorKind::AnmfFp), anmf_fp(&z, p, &sec, &cfg).unwrap()));
        assert_eq!(s.get(DetectorKind::Vae), Some(crate::calibration::vae_score(&vae, &z).unwrap()));
        assert_eq!(ctx.evaluate(&z, &sec).unwrap(), s);
    }

    #[test]
    fn sweep_matches_snapshot_draw_order() {
        let spec = ScenarioSpec::standard(NoiseKind::CgnAwgn);
        let sim = Simulator::new(&spec).unwrap();
        let ctx = TrialContext::new(sim.clone(), &[DetectorKind::Mf], None, EstimatorConfig::default()).unwrap();
        let grid = [0.0, 7.0, 15.0];
        let sweep = ctx.h1_sweep(&grid, &mut RadarRng::substream(2, 3, 4)).unwrap();
        for (snr, s) in grid.iter().zip(&sweep) {
            let snap = sim.snapshot(Hypothesis::H1, *snr, &mut RadarRng::substream(2, 3, 4));
            let want = mf_statistic(&snap.z, sim.steering(), &sim.clairvoyant_covariance()).unwrap();
            assert!((s.get(DetectorKind::Mf).unwrap() - want).abs() < 1e-9 * want.max(1.0));
            assert_eq!(s.get(DetectorKind::Nmf), None);
        }
    }

    #[test]
    fn vae_requires_model() {
        let sim = Simulator::new(&ScenarioSpec::standard(NoiseKind::Ccgn)).unwrap();
        assert!(matches!(
            TrialContext::new(sim.clone(), &[DetectorKind::Vae], None, EstimatorConfig::default()),
            Err(Error::MissingModel(_))
        ));
        assert!(TrialContext::new(sim, &[], None, EstimatorConfig::default()).is_err());
    }
}
