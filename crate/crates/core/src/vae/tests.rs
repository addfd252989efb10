use super::*;
use crate::linalg::toeplitz;
use crate::scenario::sample_complex_gaussian;
use std::vec::Vec;

fn random_batch(arch: &VaeArch, batch: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut r = RadarRng::substream(seed, 99, 0);
    let input = (0..batch * arch.input_len()).map(|_| r.normal()).collect();
    let eps = (0..batch * arch.latent).map(|_| r.normal()).collect();
    (input, eps)
}

fn params(seed: u64) -> VaeParams {
    VaeParams::init(VaeArch::default(), &mut RadarRng::substream(seed, 1, 0)).unwrap()
}

#[test]
fn snapshot_encoding_examples() {
    let ones = ComplexVec::new(vec![C64::new(1.0, 0.0); 4]).unwrap();
    let t = snapshot_to_input(&ones, InputMode::TimeIq);
    assert_eq!(t.shape, vec![2, 4]);
    assert_eq!(t.data, vec![1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    let j = ComplexVec::new(vec![C64::new(0.0, 1.0); 4]).unwrap();
    assert_eq!(
        snapshot_to_input(&j, InputMode::TimeIq).data,
        vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]
    );
    let z = ComplexVec::new((0..8).map(|k| C64::new(k as f64 * 0.3, -(k as f64))).collect()).unwrap();
    assert_eq!(input_to_snapshot(&snapshot_to_input(&z, InputMode::TimeIq)).unwrap(), z);
}

#[test]
fn fft_magnitude_of_a_tone() {
    let m = 16;
    let tone = ComplexVec::new(
        (0..m)
            .map(|k| C64::from_polar(1.0, 2.0 * core::f64::consts::PI * 3.0 * k as f64 / m as f64))
            .collect(),
    )
    .unwrap();
    let t = snapshot_to_input(&tone, InputMode::FftMagnitude);
    for f in 0..m {
        let want = if f == 3 { 4.0 } else { 0.0 };
        assert!((t.data[f] - want).abs() < 1e-12);
        assert_eq!(t.data[m + f], 0.0);
    }
}

#[test]
fn loss_examples() {
    let z = [0.3, -1.0, 2.0, 0.5];
    let q0 = [0.0; 12];
    assert_eq!(loss_vae(&z, &z, &q0, &q0, 100.0), LossBreakdown::default());
    let mut mu = [0.0; 12];
    mu[0] = 1.0;
    assert!((loss_vae(&z, &z, &mu, &q0, 1.0).kl - 0.5).abs() < 1e-15);
    let mut lv = [0.0; 12];
    lv[0] = 4.0f64.ln();
    let kl = loss_vae(&z, &z, &q0, &lv, 1.0).kl;
    assert!((kl - 0.5 * (4.0 - 1.0 - 4.0f64.ln())).abs() < 1e-15);
    assert!((kl - 0.80685).abs() < 1e-5);
    let l = loss_vae(&z, &[0.0; 4], &mu, &lv, 10.0);
    assert!((l.rec - (0.09 + 1.0 + 4.0 + 0.25)).abs() < 1e-12);
    assert!((l.total - (l.rec + 10.0 * l.kl)).abs() < 1e-12);
}

#[test]
fn reparameterization() {
    let mu = [0.5, -1.0, 2.0];
    let lv = [0.0, 1.0, -2.0];
    let s = LatentSample::with_eps(&mu, &lv, vec![0.0; 3]);
    assert_eq!(s.x, mu.to_vec());
    let s = LatentSample::with_eps(&mu, &[0.0; 3], vec![1.0, 0.0, 0.0]);
    assert_eq!(s.x, vec![1.5, -1.0, 2.0]);
    let mut r = RadarRng::substream(5, 0, 0);
    let n = 100_000;
    let mut mean = [0.0; 3];
    for _ in 0..n {
        let s = reparameterize(&mu, &lv, &mut r);
        for i in 0..3 {
            assert_eq!(s.x[i], s.mu[i] + (s.log_var[i] / 2.0).exp() * s.eps[i]);
            mean[i] += s.x[i] / n as f64;
        }
    }
    for i in 0..3 {
        assert!((mean[i] - mu[i]).abs() < 0.02 * (lv[i] / 2.0).exp());
    }
}

#[test]
fn zero_weights_route_mu_bias() {
    let mut p = params(2);
    for (name, t) in p.trainable_mut() {
        if name.starts_with("enc.") && name.ends_with(".weight") && !name.contains("bn") {
            t.data.fill(0.0);
        }
    }
    let (mu, lv) = p.encode(&vec![0.0; 32], Mode::Eval).unwrap();
    assert_eq!(mu, p.fc_mu.bias.data);
    assert_eq!(lv, p.fc_logvar.bias.data);
}

#[test]
fn shapes_and_determinism() {
    let p = params(3);
    let (input, _) = random_batch(&p.arch, 128, 4);
    let (mu, lv) = p.encode(&input, Mode::Eval).unwrap();
    assert_eq!((mu.len(), lv.len()), (128 * 12, 128 * 12));
    let (mu2, _) = p.encode(&input, Mode::Eval).unwrap();
    assert_eq!(mu, mu2);
    let out = p.decode(&mu[..12], Mode::Eval).unwrap();
    assert_eq!(out.len(), 32);
    assert_eq!(out, p.decode(&mu[..12], Mode::Eval).unwrap());
    assert!(out.iter().all(|v| v.is_finite()));
    assert!(p.encode(&input[..31], Mode::Eval).is_err());
    assert!(p.decode(&mu[..11], Mode::Eval).is_err());
}

#[test]
fn eval_mode_ignores_batch_composition() {
    let p = params(6);
    let (input, _) = random_batch(&p.arch, 4, 7);
    let (all, _) = p.encode(&input, Mode::Eval).unwrap();
    let (one, _) = p.encode(&input[32..64], Mode::Eval).unwrap();
    assert_eq!(&all[12..24], &one[..]);
}

#[test]
fn gradients_match_finite_differences() {
    let p = params(8);
    let (input, eps) = random_batch(&p.arch, 6, 9);
    let report = gradient_check(&p, &input, &eps, 100.0, 1e-5).unwrap();
    assert_eq!(report.len(), 17);
    for g in &report {
        assert!(g.analytic_norm > 0.0, "{} has zero gradient", g.name);
        assert!(g.rel_error < 1e-4, "{}: {}", g.name, g.rel_error);
    }
}

#[test]
fn beta_zero_leaves_only_reconstruction_path() {
    let p = params(10);
    let (input, _) = random_batch(&p.arch, 4, 11);
    let eps = vec![0.0; 4 * 12];
    let cache = p.forward(&input, Mode::Train, Latent::Sampled(&eps)).unwrap();
    let g = p.backward(&cache, 0.0).unwrap();
    // With eps = 0 and no KL term, log σ² does not reach the loss.
    assert!(g.fc_logvar.weight.data.iter().all(|v| *v == 0.0));
    assert!(g.fc_logvar.bias.data.iter().all(|v| *v == 0.0));
    assert!(g.fc_mu.weight.data.iter().any(|v| *v != 0.0));
}

#[test]
fn reconstruction_gradient_vanishes_at_exact_fit() {
    let p = params(12);
    let (_, eps) = random_batch(&p.arch, 3, 13);
    let (input, _) = random_batch(&p.arch, 3, 14);
    let cache = p.forward(&input, Mode::Train, Latent::Sampled(&eps)).unwrap();
    // Feed the network its own output as the target.
    let mut fit = cache.clone();
    fit.input = cache.output.clone();
    let g = p.backward(&fit, 0.0).unwrap();
    for (name, t) in g.trainable() {
        assert!(t.data.iter().all(|v| *v == 0.0), "{name}");
    }
}

#[test]
fn kl_is_nonnegative() {
    let mut r = RadarRng::substream(15, 0, 0);
    for _ in 0..1000 {
        let mu: Vec<f64> = (0..12).map(|_| 3.0 * r.normal()).collect();
        let lv: Vec<f64> = (0..12).map(|_| 3.0 * r.normal()).collect();
        assert!(kl_divergence(&mu, &lv) > 0.0);
    }
    assert_eq!(kl_divergence(&[0.0; 12], &[0.0; 12]), 0.0);
}

#[test]
fn adam_properties() {
    let cfg = AdamConfig::default();
    let mut p = vec![1.0, -2.0, 3.0];
    let (mut m, mut v) = (vec![0.0; 3], vec![0.0; 3]);
    adam_update(&mut p, &[0.0; 3], &mut m, &mut v, 1, &cfg);
    assert_eq!(p, vec![1.0, -2.0, 3.0]);
    adam_update(&mut p, &[0.5, -3.0, 1e-3], &mut m, &mut v, 1, &cfg);
    for (after, (before, sign)) in p.iter().zip([(1.0, 1.0), (-2.0, -1.0), (3.0, 1.0)]) {
        let step = before - after;
        assert!((step - sign * cfg.lr).abs() < 1e-7 * cfg.lr.max(1.0) + 1e-5 * cfg.lr);
    }
}

#[test]
fn running_stats_and_rounding() {
    let mut p = params(16);
    let (input, eps) = random_batch(&p.arch, 8, 17);
    let cache = p.forward(&input, Mode::Train, Latent::Sampled(&eps)).unwrap();
    p.update_running_stats(&cache);
    assert!(p.bn1.running_var.data.iter().all(|v| *v > 0.0));
    assert!(p.bn1.running_mean.data.iter().any(|v| *v != 0.0));
    p.round_to_f32();
    for (_, t) in p.named_tensors() {
        assert!(t.data.iter().all(|v| f64::from(*v as f32) == *v));
    }
    let rebuilt = VaeParams::from_named(
        p.named_tensors()
            .into_iter()
            .map(|(n, t)| (alloc::string::String::from(n), t))
            .collect(),
    )
    .unwrap();
    assert_eq!(rebuilt, p);
}

#[test]
fn short_training_run_reduces_loss_and_is_reproducible() {
    let cov = toeplitz(0.5, 16).unwrap();
    let mut r = RadarRng::substream(18, 0, 0);
    let data: Vec<ComplexVec> = (0..600).map(|_| sample_complex_gaussian(&cov, &mut r).unwrap()).collect();
    let cfg = TrainConfig {
        epochs: 6,
        batch_size: 64,
        seed: 3,
        ..TrainConfig::default()
    };
    let a = train(&data, &cfg).unwrap();
    assert_eq!(a.history.len(), 6);
    assert!(a.history[5].train.total < a.history[0].train.total);
    let b = train(&data, &cfg).unwrap();
    assert_eq!(a.params, b.params);
    assert!(train(&[], &cfg).is_err());
    assert!(train(&data, &TrainConfig { batch_size: 1, ..cfg }).is_err());
}
