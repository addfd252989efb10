//! Batched 1D layer kernels with hand-written backward passes.
//!
//! Activations are laid out `[batch][channel][length]`, row-major.

use alloc::vec;
use alloc::vec::Vec;

/// `y = conv(x, w) + b`, kernel 3, zero padding 1, stride 1.
/// `w` is `[cout][cin][3]`.
pub fn conv1d_forward(
    x: &[f64],
    w: &[f64],
    bias: Option<&[f64]>,
    batch: usize,
    cin: usize,
    cout: usize,
    len: usize,
) -> Vec<f64> {
    debug_assert_eq!(x.len(), batch * cin * len);
    debug_assert_eq!(w.len(), cout * cin * 3);
    let mut y = vec![0.0; batch * cout * len];
    for b in 0..batch {
        for co in 0..cout {
            let out = &mut y[(b * cout + co) * len..(b * cout + co + 1) * len];
            if let Some(bias) = bias {
                out.fill(bias[co]);
            }
            for ci in 0..cin {
                let xin = &x[(b * cin + ci) * len..(b * cin + ci + 1) * len];
                let k = &w[(co * cin + ci) * 3..(co * cin + ci) * 3 + 3];
                // tap 0 reads x[t-1], tap 1 x[t], tap 2 x[t+1]
                for t in 1..len {
                    out[t] += k[0] * xin[t - 1];
                }
                for t in 0..len {
                    out[t] += k[1] * xin[t];
                }
                for t in 0..len - 1 {
                    out[t] += k[2] * xin[t + 1];
                }
            }
        }
    }
    y
}

/// Returns `(dx, dw, db)`.
pub fn conv1d_backward(
    x: &[f64],
    w: &[f64],
    dy: &[f64],
    batch: usize,
    cin: usize,
    cout: usize,
    len: usize,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut dx = vec![0.0; batch * cin * len];
    let mut dw = vec![0.0; cout * cin * 3];
    let mut db = vec![0.0; cout];
    for b in 0..batch {
        for co in 0..cout {
            let g = &dy[(b * cout + co) * len..(b * cout + co + 1) * len];
            db[co] += g.iter().sum::<f64>();
            for ci in 0..cin {
                let base = (b * cin + ci) * len;
                let xin = &x[base..base + len];
                let wi = (co * cin + ci) * 3;
                let (k0, k1, k2) = (w[wi], w[wi + 1], w[wi + 2]);
                let (mut g0, mut g1, mut g2) = (0.0, 0.0, 0.0);
                let dxi = &mut dx[base..base + len];
                for t in 1..len {
                    g0 += g[t] * xin[t - 1];
                    dxi[t - 1] += k0 * g[t];
                }
                for t in 0..len {
                    g1 += g[t] * xin[t];
                    dxi[t] += k1 * g[t];
                }
                for t in 0..len - 1 {
                    g2 += g[t] * xin[t + 1];
                    dxi[t + 1] += k2 * g[t];
                }
                dw[wi] += g0;
                dw[wi + 1] += g1;
                dw[wi + 2] += g2;
            }
        }
    }
    (dx, dw, db)
}

/// Per-channel batch statistics (biased variance) over batch and length.
pub fn channel_stats(x: &[f64], batch: usize, c: usize, len: usize) -> (Vec<f64>, Vec<f64>) {
    let n = (batch * len) as f64;
    let mut mean = vec![0.0; c];
    let mut var = vec![0.0; c];
    for b in 0..batch {
        for ch in 0..c {
            mean[ch] += x[(b * c + ch) * len..(b * c + ch + 1) * len].iter().sum::<f64>();
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    for b in 0..batch {
        for ch in 0..c {
            var[ch] += x[(b * c + ch) * len..(b * c + ch + 1) * len]
                .iter()
                .map(|v| (v - mean[ch]).powi(2))
                .sum::<f64>();
        }
    }
    for v in &mut var {
        *v /= n;
    }
    (mean, var)
}

/// `y = gamma * (x - mean) / sqrt(var + eps) + beta`; also returns `x_hat`.
#[allow(clippy::too_many_arguments)]
pub fn batchnorm_apply(
    x: &[f64],
    mean: &[f64],
    var: &[f64],
    gamma: &[f64],
    beta: &[f64],
    eps: f64,
    batch: usize,
    c: usize,
    len: usize,
) -> (Vec<f64>, Vec<f64>) {
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + eps).sqrt()).collect();
    let mut xhat = vec![0.0; x.len()];
    let mut y = vec![0.0; x.len()];
    for b in 0..batch {
        for ch in 0..c {
            let r = (b * c + ch) * len..(b * c + ch + 1) * len;
            for i in r {
                let h = (x[i] - mean[ch]) * inv_std[ch];
                xhat[i] = h;
                y[i] = gamma[ch] * h + beta[ch];
            }
        }
    }
    (y, xhat)
}

/// Backward of train-mode batch norm. Returns `(dx, dgamma, dbeta)`.
#[allow(clippy::too_many_arguments)]
pub fn batchnorm_backward(
    dy: &[f64],
    xhat: &[f64],
    var: &[f64],
    gamma: &[f64],
    eps: f64,
    batch: usize,
    c: usize,
    len: usize,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = (batch * len) as f64;
    let mut dgamma = vec![0.0; c];
    let mut dbeta = vec![0.0; c];
    for b in 0..batch {
        for ch in 0..c {
            for i in (b * c + ch) * len..(b * c + ch + 1) * len {
                dgamma[ch] += dy[i] * xhat[i];
                dbeta[ch] += dy[i];
            }
        }
    }
    let mut dx = vec![0.0; dy.len()];
    for ch in 0..c {
        let inv_std = 1.0 / (var[ch] + eps).sqrt();
        // dxhat = dy * gamma; sums of dxhat and dxhat * xhat reduce to dbeta, dgamma.
        let k = gamma[ch] * inv_std / n;
        for b in 0..batch {
            for i in (b * c + ch) * len..(b * c + ch + 1) * len {
                dx[i] = k * (n * dy[i] - dbeta[ch] - xhat[i] * dgamma[ch]);
            }
        }
    }
    (dx, dgamma, dbeta)
}

pub fn relu_in_place(x: &mut [f64]) {
    for v in x {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Zero the gradient where the ReLU output was not positive.
pub fn relu_backward_in_place(dy: &mut [f64], out: &[f64]) {
    for (g, &o) in dy.iter_mut().zip(out) {
        if o <= 0.0 {
            *g = 0.0;
        }
    }
}

/// Max-pool with window 2 and stride 2 along length. Returns the pooled
/// values and, for each output, the flat index of the winning input.
pub fn maxpool2_forward(x: &[f64], rows: usize, len: usize) -> (Vec<f64>, Vec<usize>) {
    let half = len / 2;
    let mut y = Vec::with_capacity(rows * half);
    let mut arg = Vec::with_capacity(rows * half);
    for r in 0..rows {
        for t in 0..half {
            let i = r * len + 2 * t;
            // First index wins ties.
            if x[i + 1] > x[i] {
                y.push(x[i + 1]);
                arg.push(i + 1);
            } else {
                y.push(x[i]);
                arg.push(i);
            }
        }
    }
    (y, arg)
}

pub fn maxpool2_backward(dy: &[f64], arg: &[usize], input_len: usize) -> Vec<f64> {
    let mut dx = vec![0.0; input_len];
    for (g, &i) in dy.iter().zip(arg) {
        dx[i] += g;
    }
    dx
}

/// Nearest-neighbour upsampling by 2 along length.
pub fn upsample2_forward(x: &[f64], rows: usize, len: usize) -> Vec<f64> {
    let mut y = Vec::with_capacity(rows * len * 2);
    for v in x.iter().take(rows * len) {
        y.push(*v);
        y.push(*v);
    }
    y
}

pub fn upsample2_backward(dy: &[f64]) -> Vec<f64> {
    dy.chunks_exact(2).map(|p| p[0] + p[1]).collect()
}

/// `y = W x + b` per batch row; `w` is `[out][in]`.
pub fn linear_forward(x: &[f64], w: &[f64], b: &[f64], batch: usize, nin: usize, nout: usize) -> Vec<f64> {
    let mut y = vec![0.0; batch * nout];
    for s in 0..batch {
        let xs = &x[s * nin..(s + 1) * nin];
        for o in 0..nout {
            let row = &w[o * nin..(o + 1) * nin];
            y[s * nout + o] = b[o] + row.iter().zip(xs).map(|(a, c)| a * c).sum::<f64>();
        }
    }
    y
}

/// Returns `(dx, dw, db)`.
pub fn linear_backward(
    x: &[f64],
    w: &[f64],
    dy: &[f64],
    batch: usize,
    nin: usize,
    nout: usize,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut dx = vec![0.0; batch * nin];
    let mut dw = vec![0.0; nout * nin];
    let mut db = vec![0.0; nout];
    for s in 0..batch {
        let xs = &x[s * nin..(s + 1) * nin];
        let dxs = &mut dx[s * nin..(s + 1) * nin];
        for o in 0..nout {
            let g = dy[s * nout + o];
            if g == 0.0 {
                continue;
            }
            db[o] += g;
            let row = &w[o * nin..(o + 1) * nin];
            let drow = &mut dw[o * nin..(o + 1) * nin];
            for i in 0..nin {
                drow[i] += g * xs[i];
                dxs[i] += g * row[i];
            }
        }
    }
    (dx, dw, db)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conv_matches_direct_sum() {
        let (batch, cin, cout, len) = (2, 2, 3, 5);
        let x: Vec<f64> = (0..batch * cin * len).map(|i| (i as f64 * 0.37).sin()).collect();
        let w: Vec<f64> = (0..cout * cin * 3).map(|i| (i as f64 * 0.11).cos()).collect();
        let bias = [0.1, -0.2, 0.3];
        let y = conv1d_forward(&x, &w, Some(&bias), batch, cin, cout, len);
        for b in 0..batch {
            for co in 0..cout {
                for t in 0..len {
                    let mut s = bias[co];
                    for ci in 0..cin {
                        for k in 0..3 {
                            let src = t as isize + k as isize - 1;
                            if (0..len as isize).contains(&src) {
                                s += w[(co * cin + ci) * 3 + k] * x[(b * cin + ci) * len + src as usize];
                            }
                        }
                    }
                    assert!((y[(b * cout + co) * len + t] - s).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn maxpool_routes_to_argmax() {
        let x = [1.0, 3.0, 2.0, 2.0, -1.0, -4.0];
        let (y, arg) = maxpool2_forward(&x, 1, 6);
        assert_eq!(y, [3.0, 2.0, -1.0]);
        assert_eq!(arg, [1, 2, 4]);
        let dx = maxpool2_backward(&[1.0, 2.0, 3.0], &arg, 6);
        assert_eq!(dx, [0.0, 1.0, 2.0, 0.0, 3.0, 0.0]);
    }

    #[test]
    fn upsample_round_trip() {
        let x = [1.0, 2.0, 3.0];
        let y = upsample2_forward(&x, 1, 3);
        assert_eq!(y, [1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        assert_eq!(upsample2_backward(&y), [2.0, 4.0, 6.0]);
    }

    #[test]
    fn batchnorm_normalizes() {
        let x: Vec<f64> = (0..24).map(|i| i as f64 * 0.5 - 3.0).collect();
        let (mean, var) = channel_stats(&x, 3, 2, 4);
        let (_, xhat) = batchnorm_apply(&x, &mean, &var, &[1.0, 1.0], &[0.0, 0.0], 0.0, 3, 2, 4);
        let (m2, v2) = channel_stats(&xhat, 3, 2, 4);
        for c in 0..2 {
            assert!(m2[c].abs() < 1e-12);
            assert!((v2[c] - 1.0).abs() < 1e-12);
        }
    }
}
