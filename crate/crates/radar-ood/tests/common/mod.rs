//! Closed-form oracles, kept independent of the library code paths.
#![allow(dead_code)]

/// `Q1(sqrt(2 s), sqrt(2 λ))` as a Poisson mixture of Gamma tails:
/// `Σ_k Pois(k; s) · P(Gamma(k + 1, 1) > λ)`.
pub fn marcum_q1(snr_w: f64, lambda: f64) -> f64 {
    let mut pois = (-snr_w).exp();
    // P(Gamma(k + 1) > λ) = e^{-λ} Σ_{j ≤ k} λ^j / j!
    let mut term = (-lambda).exp();
    let mut tail = term;
    let mut total = 0.0;
    for k in 0..10_000 {
        total += pois * tail;
        pois *= snr_w / (k + 1) as f64;
        term *= lambda / (k + 1) as f64;
        tail += term;
        if k as f64 > snr_w + 10.0 && pois < 1e-18 {
            break;
        }
    }
    total.min(1.0)
}

/// Complex `A x = b` by Gaussian elimination with partial pivoting, on
/// `(re, im)` pairs.
pub fn solve(a: &[Vec<(f64, f64)>], b: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let n = b.len();
    let mul = |x: (f64, f64), y: (f64, f64)| (x.0 * y.0 - x.1 * y.1, x.0 * y.1 + x.1 * y.0);
    let div = |x: (f64, f64), y: (f64, f64)| {
        let d = y.0 * y.0 + y.1 * y.1;
        ((x.0 * y.0 + x.1 * y.1) / d, (x.1 * y.0 - x.0 * y.1) / d)
    };
    let mut m: Vec<Vec<(f64, f64)>> = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let mut r = row.clone();
            r.push(bi);
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| {
                let ni = m[i][col].0.hypot(m[i][col].1);
                let nj = m[j][col].0.hypot(m[j][col].1);
                ni.total_cmp(&nj)
            })
            .unwrap();
        m.swap(col, piv);
        for row in col + 1..n {
            let f = div(m[row][col], m[col][col]);
            for k in col..=n {
                let t = mul(f, m[col][k]);
                m[row][k].0 -= t.0;
                m[row][k].1 -= t.1;
            }
        }
    }
    let mut x = vec![(0.0, 0.0); n];
    for row in (0..n).rev() {
        let mut acc = m[row][n];
        for k in row + 1..n {
            let t = mul(m[row][k], x[k]);
            acc.0 -= t.0;
            acc.1 -= t.1;
        }
        x[row] = div(acc, m[row][row]);
    }
    x
}

/// `p^H (T(ρ) + σ² I)^{-1} p` for the Doppler steering vector of bin `d`.
pub fn whitened_steering_power(rho: f64, sigma2: f64, m: usize, d: usize) -> f64 {
    let a: Vec<Vec<(f64, f64)>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let v = rho.powi((i as i32 - j as i32).abs()) + if i == j { sigma2 } else { 0.0 };
                    (v, 0.0)
                })
                .collect()
        })
        .collect();
    let p: Vec<(f64, f64)> = (0..m)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * (d * k) as f64 / m as f64;
            (t.cos(), t.sin())
        })
        .collect();
    let x = solve(&a, &p);
    // p^H x, real for Hermitian positive definite A.
    p.iter().zip(&x).map(|(pi, xi)| pi.0 * xi.0 + pi.1 * xi.1).sum()
}

/// Whitened SNR `|α|² p^H Σ^{-1} p` with `|α|² = 10^(snr/10) / m`.
pub fn whitened_snr(snr_db: f64, rho: f64, sigma2: f64, m: usize, d: usize) -> f64 {
    10f64.powf(snr_db / 10.0) / m as f64 * whitened_steering_power(rho, sigma2, m, d)
}
