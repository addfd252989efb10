//! Known-covariance Gaussian noise: the MF statistic is Exp(1) and the NMF
//! statistic is Beta(1, m - 1).

use radar_ood_core::detectors::DetectorKind;
use radar_ood_core::estimators::EstimatorConfig;
use radar_ood_core::rng::RadarRng;
use radar_ood_core::scenario::{NoiseKind, ScenarioSpec, Simulator};
use radar_ood_core::trial::TrialContext;

const N: usize = 40_000;

fn statistics(kind: NoiseKind, d: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let spec = ScenarioSpec {
        doppler_bin: d,
        seed,
        ..ScenarioSpec::standard(kind)
    };
    let ctx = TrialContext::new(
        Simulator::new(&spec).unwrap(),
        &[DetectorKind::Mf, DetectorKind::Nmf],
        None,
        EstimatorConfig::default(),
    )
    .unwrap();
    let mut mf = Vec::with_capacity(N);
    let mut nmf = Vec::with_capacity(N);
    for i in 0..N as u64 {
        let s = ctx.h0(&mut RadarRng::substream(seed, 999, i)).unwrap();
        mf.push(s.get(DetectorKind::Mf).unwrap());
        nmf.push(s.get(DetectorKind::Nmf).unwrap());
    }
    (mf, nmf)
}

fn tail(scores: &[f64], lambda: f64) -> f64 {
    scores.iter().filter(|&&s| s > lambda).count() as f64 / scores.len() as f64
}

fn within(p_hat: f64, p: f64) -> bool {
    (p_hat - p).abs() <= 4.0 * (p * (1.0 - p) / N as f64).sqrt()
}

#[test]
fn mf_tail_is_exponential() {
    for (kind, d) in [(NoiseKind::CgnAwgn, 0), (NoiseKind::CgnAwgn, 5)] {
        let (mf, _) = statistics(kind, d, 21 + d as u64);
        for pfa in [0.5, 0.1, 0.01] {
            let lambda = -f64::ln(pfa);
            assert!(within(tail(&mf, lambda), pfa), "{kind} d={d} pfa={pfa}: {}", tail(&mf, lambda));
        }
        let mean = mf.iter().sum::<f64>() / N as f64;
        assert!((mean - 1.0).abs() < 4.0 / (N as f64).sqrt());
    }
}

#[test]
fn nmf_tail_is_beta() {
    let (_, nmf) = statistics(NoiseKind::CgnAwgn, 3, 5);
    for pfa in [0.5, 0.1, 0.01] {
        let lambda = 1.0 - f64::powf(pfa, 1.0 / 15.0);
        assert!(within(tail(&nmf, lambda), pfa), "pfa={pfa}: {}", tail(&nmf, lambda));
    }
    let mean = nmf.iter().sum::<f64>() / N as f64;
    assert!((mean - 1.0 / 16.0).abs() < 0.002);
}

#[test]
fn nmf_tail_survives_compound_clutter() {
    // Texture cancels in the NMF when there is no thermal noise.
    let (mf, nmf) = statistics(NoiseKind::Ccgn, 0, 8);
    let lambda = 1.0 - f64::powf(0.01, 1.0 / 15.0);
    assert!(within(tail(&nmf, lambda), 0.01), "{}", tail(&nmf, lambda));
    // The MF does not keep its false-alarm rate there.
    assert!(!within(tail(&mf, -f64::ln(0.01)), 0.01));
}
