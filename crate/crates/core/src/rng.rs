//! Seeded random streams.
//!
//! Every random quantity in the workbench is drawn from a ChaCha8 stream
//! identified by `(seed, tag, index)`:
//!
//! * the 256-bit ChaCha key is `seed` (8 bytes LE) ‖ `tag` (8 bytes LE) ‖ 16 zero bytes,
//! * the 64-bit ChaCha stream id (nonce) is `index`.
//!
//! `tag` names the purpose (training data, calibration trials, H1 trials at a
//! given Doppler bin, ...) and `index` is the trial or sample number, so a work
//! item can rebuild its stream from scratch wherever it is scheduled. Serial
//! and parallel runs therefore consume identical random numbers.

use core::f64::consts::PI;

use rand_chacha::ChaCha8Rng;
use rand_core::{Rng, SeedableRng};

use crate::linalg::C64;

/// Purpose tags. The high 32 bits select a domain, the low 32 bits a
/// sub-index inside it (e.g. the Doppler bin).
pub mod tags {
    pub const TRAIN_DATA: u32 = 1;
    pub const EVAL_DATA: u32 = 2;
    pub const VAE_INIT: u32 = 3;
    pub const VAE_SHUFFLE: u32 = 4;
    pub const VAE_EPS: u32 = 5;
    pub const VAE_VALIDATION: u32 = 6;
    pub const CALIBRATION_H0: u32 = 10;
    pub const FRESH_H0: u32 = 11;
    pub const PD_H1: u32 = 12;
    pub const HISTOGRAM_H0: u32 = 13;
    pub const HISTOGRAM_H1: u32 = 14;
    pub const DATASET: u32 = 20;
    pub const SECONDARY: u32 = 21;
}

pub fn stream_tag(domain: u32, sub: u32) -> u64 {
    (u64::from(domain) << 32) | u64::from(sub)
}

/// Random source with Box-Muller normals and Marsaglia-Tsang Gamma draws.
#[derive(Debug, Clone)]
pub struct RadarRng {
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl RadarRng {
    /// The substream for `(seed, tag, index)`; see module docs.
    pub fn substream(seed: u64, tag: u64, index: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        key[8..16].copy_from_slice(&tag.to_le_bytes());
        let mut inner = ChaCha8Rng::from_seed(key);
        inner.set_stream(index);
        Self {
            inner,
            spare_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on the open interval (0, 1), 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n` (Lemire's multiply-shift with rejection).
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0);
        let n = n as u64;
        let threshold = n.wrapping_neg() % n;
        loop {
            let x = self.inner.next_u64();
            let wide = u128::from(x) * u128::from(n);
            if (wide as u64) >= threshold {
                return (wide >> 64) as usize;
            }
        }
    }

    /// Standard real normal via Box-Muller; the second variate of each pair
    /// is cached.
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let r = (-2.0 * self.uniform().ln()).sqrt();
        let theta = 2.0 * PI * self.uniform();
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// `(N(0,1) + j N(0,1)) / sqrt(2)`: unit total variance, both parts from
    /// one Box-Muller pair.
    pub fn complex_normal(&mut self) -> C64 {
        let r = (-self.uniform().ln()).sqrt();
        let theta = 2.0 * PI * self.uniform();
        C64::new(r * theta.cos(), r * theta.sin())
    }

    /// Gamma(shape, scale = 1).
    ///
    /// Marsaglia-Tsang squeeze for shape >= 1; for shape < 1 the draw is
    /// boosted as `Gamma(shape + 1) * U^(1/shape)`.
    pub fn gamma(&mut self, shape: f64) -> f64 {
        debug_assert!(shape > 0.0);
        if shape < 1.0 {
            let g = self.gamma(shape + 1.0);
            return g * self.uniform().powf(1.0 / shape);
        }
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.normal();
            let t = 1.0 + c * x;
            if t <= 0.0 {
                continue;
            }
            let v = t * t * t;
            let u = self.uniform();
            let x2 = x * x;
            if u < 1.0 - 0.0331 * x2 * x2 {
                return d * v;
            }
            if u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
                return d * v;
            }
        }
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
