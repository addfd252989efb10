mod common;

use common::{marcum_q1, solve, whitened_steering_power};

#[test]
fn marcum_matches_numerical_integration() {
    // P(|w|² > λ) for w ~ CN(sqrt(s), 1): integrate the Rician density of |w|
    // on a fine grid as a second route.
    for &(s, lambda) in &[(0.5f64, 4.6f64), (3.0, 4.6), (10.0, 4.6), (20.0, 2.0)] {
        let pdf = |r: f64| {
            // 2 r exp(-(r² + s)) I0(2 r sqrt(s))
            let x = 2.0 * r * f64::sqrt(s);
            let mut i0 = 0.0;
            let mut t = 1.0;
            for k in 0..400 {
                i0 += t;
                t *= (x / 2.0) * (x / 2.0) / ((k + 1) as f64 * (k + 1) as f64);
            }
            2.0 * r * (-(r * r + s)).exp() * i0
        };
        let (a, b, n) = (lambda.sqrt(), 20.0, 200_000);
        let h = (b - a) / n as f64;
        let mut acc = pdf(a) + pdf(b);
        for i in 1..n {
            acc += pdf(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let quad = acc * h / 3.0;
        assert!((marcum_q1(s, lambda) - quad).abs() < 1e-9, "s={s}: {} vs {quad}", marcum_q1(s, lambda));
    }
}

#[test]
fn solve_recovers_known_solution() {
    let a = vec![
        vec![(4.0, 0.0), (1.0, 1.0), (0.0, -2.0)],
        vec![(1.0, -1.0), (3.0, 0.0), (0.5, 0.0)],
        vec![(0.0, 2.0), (0.5, 0.0), (5.0, 0.0)],
    ];
    let x = [(1.0, -1.0), (0.5, 2.0), (-3.0, 0.25)];
    let b: Vec<(f64, f64)> = a
        .iter()
        .map(|row| {
            row.iter().zip(&x).fold((0.0, 0.0), |acc, (r, v)| {
                (acc.0 + r.0 * v.0 - r.1 * v.1, acc.1 + r.0 * v.1 + r.1 * v.0)
            })
        })
        .collect();
    for (got, want) in solve(&a, &b).iter().zip(&x) {
        assert!((got.0 - want.0).abs() < 1e-12 && (got.1 - want.1).abs() < 1e-12);
    }
}

#[test]
fn white_noise_steering_power_is_m_over_sigma2() {
    assert!((whitened_steering_power(0.0, 1.0, 16, 3) - 8.0).abs() < 1e-12);
}

#[test]
fn zero_doppler_sits_on_the_clutter_ridge() {
    // ρ > 0 puts clutter power at low Doppler, so whitening costs the d = 0
    // target the most and the mid-band target the least.
    let p: Vec<f64> = (0..16).map(|d| whitened_steering_power(0.5, 1.0, 16, d)).collect();
    assert!(p[8] > p[0]);
    assert!(p.iter().all(|&v| v >= p[0]));
    assert_eq!(p.iter().cloned().fold(0.0, f64::max), p[8]);
}

#[test]
fn marcum_limits() {
    // No signal: Exp(1) tail.
    assert!((marcum_q1(0.0, 4.6) - (-4.6f64).exp()).abs() < 1e-14);
    assert!((marcum_q1(3.0, 0.0) - 1.0).abs() < 1e-12);
}
