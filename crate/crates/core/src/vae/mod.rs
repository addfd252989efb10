//! 1D convolutional variational autoencoder, written from scratch.
//!
//! Default layout for m = 16, q = 12:
//!
//! ```text
//! encoder: (2,16) conv3 → BN → ReLU → pool2 → (16,8)
//!                 conv3 → BN → ReLU → pool2 → (32,4) → flatten 128
//!                 ├─ fc 128→12 → μ
//!                 └─ fc 128→12 → log σ²
//! latent:  x = μ + exp(log σ² / 2) ⊙ ε
//! decoder: fc 12→128 → (32,4) → up2 → conv3 → BN → ReLU → (16,8)
//!                 → up2 → conv3 (16→2, linear) → (2,16)
//! ```
//!
//! Convolutions feeding a batch norm carry no bias (the BN shift subsumes
//! it). Everything runs in `f64`; [`VaeParams::round_to_f32`] snaps weights
//! to the single-precision grid used on disk.

mod adam;
mod layers;
mod train;

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{ComplexVec, C64};
use crate::rng::RadarRng;

pub use adam::{Adam, AdamConfig};
pub use adam::adam_update;
pub use train::{train, train_with_progress, EpochStats, TrainConfig, TrainOutcome};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// How a complex snapshot is presented to the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputMode {
    /// Channel 0 = real parts, channel 1 = imaginary parts. Lossless.
    #[default]
    TimeIq,
    /// Channel 0 = |DFT(z)| / sqrt(m), channel 1 = 0. Discards phase.
    FftMagnitude,
}

impl InputMode {
    pub fn code(self) -> u32 {
        match self {
            InputMode::TimeIq => 0,
            InputMode::FftMagnitude => 1,
        }
    }

    pub fn from_code(c: u32) -> Option<Self> {
        match c {
            0 => Some(InputMode::TimeIq),
            1 => Some(InputMode::FftMagnitude),
            _ => None,
        }
    }
}

/// A dense real tensor with an explicit shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn filled(shape: &[usize], v: f64) -> Self {
        Self {
            shape: shape.to_vec(),
            data: vec![v; shape.iter().product()],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        if shape.iter().product::<usize>() != data.len() {
            return Err(Error::ShapeMismatch { name: "tensor" });
        }
        Ok(Self {
            shape: shape.to_vec(),
            data,
        })
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn uniform(shape: &[usize], bound: f64, rng: &mut RadarRng) -> Self {
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: (0..n).map(|_| bound * (2.0 * rng.uniform() - 1.0)).collect(),
        }
    }
}

/// Layer sizes. `m` must be divisible by 4 (two pooling stages).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VaeArch {
    pub m: usize,
    pub latent: usize,
    pub c1: usize,
    pub c2: usize,
    pub input_mode: InputMode,
}

impl Default for VaeArch {
    fn default() -> Self {
        Self {
            m: 16,
            latent: 12,
            c1: 16,
            c2: 32,
            input_mode: InputMode::TimeIq,
        }
    }
}

impl VaeArch {
    pub fn validate(&self) -> Result<()> {
        if self.m < 4 || !self.m.is_multiple_of(4) {
            return Err(Error::invalid("m", "VAE input length must be a positive multiple of 4"));
        }
        if self.latent == 0 || self.c1 == 0 || self.c2 == 0 {
            return Err(Error::invalid("latent", "layer sizes must be positive"));
        }
        Ok(())
    }

    /// Flattened encoder feature size `c2 * m / 4`.
    pub fn flat(&self) -> usize {
        self.c2 * self.m / 4
    }

    pub fn input_len(&self) -> usize {
        2 * self.m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Tensor,
    pub beta: Tensor,
    pub running_mean: Tensor,
    pub running_var: Tensor,
}

impl BatchNorm {
    fn new(c: usize) -> Self {
        Self {
            gamma: Tensor::filled(&[c], 1.0),
            beta: Tensor::zeros(&[c]),
            running_mean: Tensor::zeros(&[c]),
            running_var: Tensor::filled(&[c], 1.0),
        }
    }

    fn update_running(&mut self, mean: &[f64], var: &[f64], n: usize) {
        let unbias = if n > 1 { n as f64 / (n as f64 - 1.0) } else { 1.0 };
        for (r, m) in self.running_mean.data.iter_mut().zip(mean) {
            *r = (1.0 - BN_MOMENTUM) * *r + BN_MOMENTUM * m;
        }
        for (r, v) in self.running_var.data.iter_mut().zip(var) {
            *r = (1.0 - BN_MOMENTUM) * *r + BN_MOMENTUM * v * unbias;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    /// `[out][in]`
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Linear {
    fn new(nin: usize, nout: usize, rng: &mut RadarRng) -> Self {
        let bound = 1.0 / (nin as f64).sqrt();
        Self {
            weight: Tensor::uniform(&[nout, nin], bound, rng),
            bias: Tensor::uniform(&[nout], bound, rng),
        }
    }
}

/// All trainable tensors plus batch-norm running statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct VaeParams {
    pub arch: VaeArch,
    pub conv1: Tensor,
    pub bn1: BatchNorm,
    pub conv2: Tensor,
    pub bn2: BatchNorm,
    pub fc_mu: Linear,
    pub fc_logvar: Linear,
    pub fc_dec: Linear,
    pub conv3: Tensor,
    pub bn3: BatchNorm,
    pub conv4: Tensor,
    pub conv4_bias: Tensor,
}

/// Tensor names in canonical order; BN running statistics use the reserved
/// `.running_mean` / `.running_var` suffixes.
pub const TENSOR_NAMES: [&str; 24] = [
    "enc.conv1.weight",
    "enc.bn1.weight",
    "enc.bn1.bias",
    "enc.bn1.running_mean",
    "enc.bn1.running_var",
    "enc.conv2.weight",
    "enc.bn2.weight",
    "enc.bn2.bias",
    "enc.bn2.running_mean",
    "enc.bn2.running_var",
    "enc.fc_mu.weight",
    "enc.fc_mu.bias",
    "enc.fc_logvar.weight",
    "enc.fc_logvar.bias",
    "dec.fc.weight",
    "dec.fc.bias",
    "dec.conv3.weight",
    "dec.bn3.weight",
    "dec.bn3.bias",
    "dec.bn3.running_mean",
    "dec.bn3.running_var",
    "dec.conv4.weight",
    "dec.conv4.bias",
    "meta.input_mode",
];

pub fn is_buffer(name: &str) -> bool {
    name.ends_with(".running_mean") || name.ends_with(".running_var") || name.starts_with("meta.")
}

fn conv_init(cout: usize, cin: usize, rng: &mut RadarRng) -> Tensor {
    Tensor::uniform(&[cout, cin, 3], 1.0 / ((cin * 3) as f64).sqrt(), rng)
}

impl VaeParams {
    /// Fan-in scaled uniform init for conv / FC, BN gains 1 and shifts 0.
    pub fn init(arch: VaeArch, rng: &mut RadarRng) -> Result<Self> {
        arch.validate()?;
        let VaeArch { latent, c1, c2, .. } = arch;
        let flat = arch.flat();
        Ok(Self {
            arch,
            conv1: conv_init(c1, 2, rng),
            bn1: BatchNorm::new(c1),
            conv2: conv_init(c2, c1, rng),
            bn2: BatchNorm::new(c2),
            fc_mu: Linear::new(flat, latent, rng),
            fc_logvar: Linear::new(flat, latent, rng),
            fc_dec: Linear::new(latent, flat, rng),
            conv3: conv_init(c1, c2, rng),
            bn3: BatchNorm::new(c1),
            conv4: conv_init(2, c1, rng),
            conv4_bias: Tensor::uniform(&[2], 1.0 / ((c1 * 3) as f64).sqrt(), rng),
        })
    }

    /// Same shapes, every entry zero (gradient accumulator).
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.data.fill(0.0);
        }
        z
    }

    fn meta_tensor(&self) -> Tensor {
        Tensor {
            shape: vec![1],
            data: vec![f64::from(self.arch.input_mode.code())],
        }
    }

    /// Every stored tensor in [`TENSOR_NAMES`] order (the input-mode tag is
    /// materialized as a one-element tensor).
    pub fn named_tensors(&self) -> Vec<(&'static str, Tensor)> {
        let refs = [
            &self.conv1,
            &self.bn1.gamma,
            &self.bn1.beta,
            &self.bn1.running_mean,
            &self.bn1.running_var,
            &self.conv2,
            &self.bn2.gamma,
            &self.bn2.beta,
            &self.bn2.running_mean,
            &self.bn2.running_var,
            &self.fc_mu.weight,
            &self.fc_mu.bias,
            &self.fc_logvar.weight,
            &self.fc_logvar.bias,
            &self.fc_dec.weight,
            &self.fc_dec.bias,
            &self.conv3,
            &self.bn3.gamma,
            &self.bn3.beta,
            &self.bn3.running_mean,
            &self.bn3.running_var,
            &self.conv4,
            &self.conv4_bias,
        ];
        let mut out: Vec<(&'static str, Tensor)> = TENSOR_NAMES
            .iter()
            .zip(refs)
            .map(|(n, t)| (*n, t.clone()))
            .collect();
        out.push((TENSOR_NAMES[23], self.meta_tensor()));
        out
    }

    fn tensors_mut(&mut self) -> [&mut Tensor; 23] {
        [
            &mut self.conv1,
            &mut self.bn1.gamma,
            &mut self.bn1.beta,
            &mut self.bn1.running_mean,
            &mut self.bn1.running_var,
            &mut self.conv2,
            &mut self.bn2.gamma,
            &mut self.bn2.beta,
            &mut self.bn2.running_mean,
            &mut self.bn2.running_var,
            &mut self.fc_mu.weight,
            &mut self.fc_mu.bias,
            &mut self.fc_logvar.weight,
            &mut self.fc_logvar.bias,
            &mut self.fc_dec.weight,
            &mut self.fc_dec.bias,
            &mut self.conv3,
            &mut self.bn3.gamma,
            &mut self.bn3.beta,
            &mut self.bn3.running_mean,
            &mut self.bn3.running_var,
            &mut self.conv4,
            &mut self.conv4_bias,
        ]
    }

    /// Trainable tensors (no running statistics) in canonical order.
    pub fn trainable_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        TENSOR_NAMES
            .iter()
            .zip(self.tensors_mut())
            .filter(|(n, _)| !is_buffer(n))
            .map(|(n, t)| (*n, t))
            .collect()
    }

    pub fn trainable(&self) -> Vec<(&'static str, Tensor)> {
        self.named_tensors()
            .into_iter()
            .filter(|(n, _)| !is_buffer(n))
            .collect()
    }

    /// Rebuild from named tensors (any order). Shapes must match `arch`.
    pub fn from_named(tensors: Vec<(alloc::string::String, Tensor)>) -> Result<Self> {
        let find = |name: &'static str| -> Result<&Tensor> {
            tensors
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, t)| t)
                .ok_or(Error::ShapeMismatch { name })
        };
        let conv1 = find("enc.conv1.weight")?;
        let conv2 = find("enc.conv2.weight")?;
        let fc_mu = find("enc.fc_mu.weight")?;
        if conv1.shape.len() != 3 || conv2.shape.len() != 3 || fc_mu.shape.len() != 2 {
            return Err(Error::ShapeMismatch { name: "enc" });
        }
        let (c1, c2, latent) = (conv1.shape[0], conv2.shape[0], fc_mu.shape[0]);
        if c2 == 0 || fc_mu.shape[1] % c2 != 0 {
            return Err(Error::ShapeMismatch { name: "enc.fc_mu.weight" });
        }
        let mode_code = find("meta.input_mode")?
            .data
            .first()
            .copied()
            .ok_or(Error::ShapeMismatch { name: "meta.input_mode" })?;
        let input_mode = InputMode::from_code(mode_code as u32)
            .ok_or(Error::ShapeMismatch { name: "meta.input_mode" })?;
        let arch = VaeArch {
            m: 4 * fc_mu.shape[1] / c2,
            latent,
            c1,
            c2,
            input_mode,
        };
        arch.validate()?;
        let mut rng = RadarRng::substream(0, 0, 0);
        let mut params = VaeParams::init(arch, &mut rng)?;
        for (name, slot) in TENSOR_NAMES.iter().zip(params.tensors_mut()) {
            let t = find(name)?;
            if t.shape != slot.shape {
                return Err(Error::ShapeMismatch { name });
            }
            *slot = t.clone();
        }
        if params
            .named_tensors()
            .iter()
            .filter(|(n, _)| n.ends_with(".running_var"))
            .any(|(_, t)| t.data.iter().any(|v| !(*v > 0.0)))
        {
            return Err(Error::invalid("running_var", "must be positive"));
        }
        Ok(params)
    }

    /// Snap every tensor to the nearest `f32`.
    pub fn round_to_f32(&mut self) {
        for t in self.tensors_mut() {
            for v in &mut t.data {
                *v = f64::from(*v as f32);
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.named_tensors().iter().all(|(_, t)| t.is_finite())
    }

    pub fn parameter_count(&self) -> usize {
        self.trainable().iter().map(|(_, t)| t.numel()).sum()
    }
}

/// Encode a complex snapshot as a `(2, m)` real tensor.
pub fn snapshot_to_input(z: &ComplexVec, mode: InputMode) -> Tensor {
    let m = z.len();
    let mut data = vec![0.0; 2 * m];
    match mode {
        InputMode::TimeIq => {
            for (k, c) in z.as_slice().iter().enumerate() {
                data[k] = c.re;
                data[m + k] = c.im;
            }
        }
        InputMode::FftMagnitude => {
            let norm = 1.0 / (m as f64).sqrt();
            for f in 0..m {
                let s: C64 = z
                    .as_slice()
                    .iter()
                    .enumerate()
                    .map(|(k, c)| {
                        let ang = -2.0 * core::f64::consts::PI * ((f * k) % m) as f64 / m as f64;
                        c * C64::from_polar(1.0, ang)
                    })
                    .sum();
                data[f] = s.norm() * norm;
            }
        }
    }
    Tensor {
        shape: vec![2, m],
        data,
    }
}

/// Inverse of the `TimeIq` encoding.
pub fn input_to_snapshot(t: &Tensor) -> Result<ComplexVec> {
    if t.shape.len() != 2 || t.shape[0] != 2 {
        return Err(Error::ShapeMismatch { name: "input" });
    }
    let m = t.shape[1];
    ComplexVec::new((0..m).map(|k| C64::new(t.data[k], t.data[m + k])).collect())
}

/// Flatten a batch of snapshots into `[batch][2][m]`.
pub fn batch_input(snapshots: &[&ComplexVec], mode: InputMode) -> Vec<f64> {
    let mut out = Vec::new();
    for z in snapshots {
        out.extend_from_slice(&snapshot_to_input(z, mode).data);
    }
    out
}

/// Whether batch norm uses batch statistics or running statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// One reparameterized latent draw, kept for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSample {
    pub mu: Vec<f64>,
    pub log_var: Vec<f64>,
    pub eps: Vec<f64>,
    pub x: Vec<f64>,
}

impl LatentSample {
    pub fn with_eps(mu: &[f64], log_var: &[f64], eps: Vec<f64>) -> Self {
        let x = mu
            .iter()
            .zip(log_var)
            .zip(&eps)
            .map(|((m, lv), e)| m + (0.5 * lv).exp() * e)
            .collect();
        Self {
            mu: mu.to_vec(),
            log_var: log_var.to_vec(),
            eps,
            x,
        }
    }
}

/// `x = μ + exp(log σ² / 2) ⊙ ε` with `ε ~ N(0, I)` drawn from `rng`.
pub fn reparameterize(mu: &[f64], log_var: &[f64], rng: &mut RadarRng) -> LatentSample {
    let eps = (0..mu.len()).map(|_| rng.normal()).collect();
    LatentSample::with_eps(mu, log_var, eps)
}

/// Batch-mean losses.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub total: f64,
    pub rec: f64,
    pub kl: f64,
}

/// `rec = ||z_in - z_rec||^2`, `kl = -1/2 Σ (1 + log σ² - μ² - σ²)`,
/// `total = rec + β kl` for a single sample.
pub fn loss_vae(z_in: &[f64], z_rec: &[f64], mu: &[f64], log_var: &[f64], beta: f64) -> LossBreakdown {
    let rec = z_in
        .iter()
        .zip(z_rec)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>();
    let kl = kl_divergence(mu, log_var);
    LossBreakdown {
        total: rec + beta * kl,
        rec,
        kl,
    }
}

pub fn kl_divergence(mu: &[f64], log_var: &[f64]) -> f64 {
    -0.5 * mu
        .iter()
        .zip(log_var)
        .map(|(m, lv)| 1.0 + lv - m * m - lv.exp())
        .sum::<f64>()
}

/// Intermediates of one batched forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub batch: usize,
    pub mode: Mode,
    input: Vec<f64>,
    bn1: BnCache,
    r1: Vec<f64>,
    p1: Vec<f64>,
    p1_arg: Vec<usize>,
    bn2: BnCache,
    r2: Vec<f64>,
    h: Vec<f64>,
    h_arg: Vec<usize>,
    pub mu: Vec<f64>,
    pub log_var: Vec<f64>,
    pub eps: Vec<f64>,
    x: Vec<f64>,
    u1: Vec<f64>,
    bn3: BnCache,
    r3: Vec<f64>,
    u2: Vec<f64>,
    pub output: Vec<f64>,
}

#[derive(Debug, Clone)]
struct BnCache {
    xhat: Vec<f64>,
    mean: Vec<f64>,
    var: Vec<f64>,
}

fn bn_forward(
    bn: &BatchNorm,
    x: &[f64],
    mode: Mode,
    batch: usize,
    c: usize,
    len: usize,
) -> (Vec<f64>, BnCache) {
    let (mean, var) = match mode {
        Mode::Train => layers::channel_stats(x, batch, c, len),
        Mode::Eval => (bn.running_mean.data.clone(), bn.running_var.data.clone()),
    };
    let (y, xhat) = layers::batchnorm_apply(x, &mean, &var, &bn.gamma.data, &bn.beta.data, BN_EPS, batch, c, len);
    (y, BnCache { xhat, mean, var })
}

/// Latent noise for a forward pass.
#[derive(Debug, Clone, Copy)]
pub enum Latent<'a> {
    /// `x = μ` (deterministic scoring path).
    Mean,
    /// `x = μ + σ ⊙ ε`, `ε` laid out `[batch][q]`.
    Sampled(&'a [f64]),
}

impl VaeParams {
    fn check_batch(&self, input: &[f64]) -> Result<usize> {
        let n = self.arch.input_len();
        if input.is_empty() || !input.len().is_multiple_of(n) {
            return Err(Error::ShapeMismatch { name: "input" });
        }
        Ok(input.len() / n)
    }

    fn encode_stage(
        &self,
        input: &[f64],
        batch: usize,
        mode: Mode,
    ) -> (BnCache, Vec<f64>, Vec<f64>, Vec<usize>, BnCache, Vec<f64>, Vec<f64>, Vec<usize>, Vec<f64>, Vec<f64>) {
        let VaeArch { m, latent, c1, c2, .. } = self.arch;
        let flat = self.arch.flat();
        let a1 = layers::conv1d_forward(input, &self.conv1.data, None, batch, 2, c1, m);
        let (mut r1, bn1) = bn_forward(&self.bn1, &a1, mode, batch, c1, m);
        layers::relu_in_place(&mut r1);
        let (p1, p1_arg) = layers::maxpool2_forward(&r1, batch * c1, m);
        let a2 = layers::conv1d_forward(&p1, &self.conv2.data, None, batch, c1, c2, m / 2);
        let (mut r2, bn2) = bn_forward(&self.bn2, &a2, mode, batch, c2, m / 2);
        layers::relu_in_place(&mut r2);
        let (h, h_arg) = layers::maxpool2_forward(&r2, batch * c2, m / 2);
        let mu = layers::linear_forward(&h, &self.fc_mu.weight.data, &self.fc_mu.bias.data, batch, flat, latent);
        let log_var = layers::linear_forward(
            &h,
            &self.fc_logvar.weight.data,
            &self.fc_logvar.bias.data,
            batch,
            flat,
            latent,
        );
        (bn1, r1, p1, p1_arg, bn2, r2, h, h_arg, mu, log_var)
    }

    fn decode_stage(&self, x: &[f64], batch: usize, mode: Mode) -> (Vec<f64>, BnCache, Vec<f64>, Vec<f64>, Vec<f64>) {
        let VaeArch { m, latent, c1, c2, .. } = self.arch;
        let flat = self.arch.flat();
        let d0 = layers::linear_forward(x, &self.fc_dec.weight.data, &self.fc_dec.bias.data, batch, latent, flat);
        let u1 = layers::upsample2_forward(&d0, batch * c2, m / 4);
        let a3 = layers::conv1d_forward(&u1, &self.conv3.data, None, batch, c2, c1, m / 2);
        let (mut r3, bn3) = bn_forward(&self.bn3, &a3, mode, batch, c1, m / 2);
        layers::relu_in_place(&mut r3);
        let u2 = layers::upsample2_forward(&r3, batch * c1, m / 2);
        let out = layers::conv1d_forward(&u2, &self.conv4.data, Some(&self.conv4_bias.data), batch, c1, 2, m);
        (u1, bn3, r3, u2, out)
    }

    /// Full forward pass over `[batch][2][m]` input.
    pub fn forward(&self, input: &[f64], mode: Mode, latent: Latent<'_>) -> Result<ForwardCache> {
        let batch = self.check_batch(input)?;
        let q = self.arch.latent;
        let (bn1, r1, p1, p1_arg, bn2, r2, h, h_arg, mu, log_var) = self.encode_stage(input, batch, mode);
        let eps = match latent {
            Latent::Mean => vec![0.0; batch * q],
            Latent::Sampled(e) => {
                if e.len() != batch * q {
                    return Err(Error::ShapeMismatch { name: "eps" });
                }
                e.to_vec()
            }
        };
        let x: Vec<f64> = match latent {
            Latent::Mean => mu.clone(),
            Latent::Sampled(_) => mu
                .iter()
                .zip(&log_var)
                .zip(&eps)
                .map(|((m, lv), e)| m + (0.5 * lv).exp() * e)
                .collect(),
        };
        let (u1, bn3, r3, u2, output) = self.decode_stage(&x, batch, mode);
        Ok(ForwardCache {
            batch,
            mode,
            input: input.to_vec(),
            bn1,
            r1,
            p1,
            p1_arg,
            bn2,
            r2,
            h,
            h_arg,
            mu,
            log_var,
            eps,
            x,
            u1,
            bn3,
            r3,
            u2,
            output,
        })
    }

    /// `(μ, log σ²)`, each `[batch][q]`.
    pub fn encode(&self, input: &[f64], mode: Mode) -> Result<(Vec<f64>, Vec<f64>)> {
        let batch = self.check_batch(input)?;
        let (.., mu, log_var) = self.encode_stage(input, batch, mode);
        Ok((mu, log_var))
    }

    /// Reconstruction `[batch][2][m]` from latents `[batch][q]`.
    pub fn decode(&self, x: &[f64], mode: Mode) -> Result<Vec<f64>> {
        let q = self.arch.latent;
        if x.is_empty() || !x.len().is_multiple_of(q) {
            return Err(Error::ShapeMismatch { name: "latent" });
        }
        let (.., out) = self.decode_stage(x, x.len() / q, mode);
        Ok(out)
    }

    /// Batch-mean loss of a finished forward pass.
    pub fn loss(&self, cache: &ForwardCache, beta: f64) -> LossBreakdown {
        let n = self.arch.input_len();
        let q = self.arch.latent;
        let mut acc = LossBreakdown::default();
        for b in 0..cache.batch {
            let l = loss_vae(
                &cache.input[b * n..(b + 1) * n],
                &cache.output[b * n..(b + 1) * n],
                &cache.mu[b * q..(b + 1) * q],
                &cache.log_var[b * q..(b + 1) * q],
                beta,
            );
            acc.total += l.total;
            acc.rec += l.rec;
            acc.kl += l.kl;
        }
        let inv = 1.0 / cache.batch as f64;
        LossBreakdown {
            total: acc.total * inv,
            rec: acc.rec * inv,
            kl: acc.kl * inv,
        }
    }

    /// Train-mode forward + loss, no gradient.
    pub fn batch_loss(&self, input: &[f64], eps: &[f64], beta: f64) -> Result<LossBreakdown> {
        let cache = self.forward(input, Mode::Train, Latent::Sampled(eps))?;
        Ok(self.loss(&cache, beta))
    }

    /// Fold a train-mode pass's batch statistics into the running averages.
    pub fn update_running_stats(&mut self, cache: &ForwardCache) {
        let m = self.arch.m;
        let b = cache.batch;
        self.bn1.update_running(&cache.bn1.mean, &cache.bn1.var, b * m);
        self.bn2.update_running(&cache.bn2.mean, &cache.bn2.var, b * m / 2);
        self.bn3.update_running(&cache.bn3.mean, &cache.bn3.var, b * m / 2);
    }

    /// Exact gradients of the batch-mean total loss with respect to every
    /// trainable tensor. The cache must come from a [`Mode::Train`] pass.
    pub fn backward(&self, cache: &ForwardCache, beta: f64) -> Result<VaeParams> {
        if cache.mode != Mode::Train {
            return Err(Error::invalid("mode", "backward requires a train-mode forward pass"));
        }
        let VaeArch { m, latent: q, c1, c2, .. } = self.arch;
        let flat = self.arch.flat();
        let batch = cache.batch;
        let inv_b = 1.0 / batch as f64;
        let mut g = self.zeros_like();

        // d rec / d output
        let dout: Vec<f64> = cache
            .input
            .iter()
            .zip(&cache.output)
            .map(|(z, r)| -2.0 * (z - r) * inv_b)
            .collect();

        // decoder
        let (du2, dw4, db4) = layers::conv1d_backward(&cache.u2, &self.conv4.data, &dout, batch, c1, 2, m);
        g.conv4.data = dw4;
        g.conv4_bias.data = db4;
        let mut dr3 = layers::upsample2_backward(&du2);
        layers::relu_backward_in_place(&mut dr3, &cache.r3);
        let (da3, dg3, dbe3) = layers::batchnorm_backward(
            &dr3,
            &cache.bn3.xhat,
            &cache.bn3.var,
            &self.bn3.gamma.data,
            BN_EPS,
            batch,
            c1,
            m / 2,
        );
        g.bn3.gamma.data = dg3;
        g.bn3.beta.data = dbe3;
        let (du1, dw3, _) = layers::conv1d_backward(&cache.u1, &self.conv3.data, &da3, batch, c2, c1, m / 2);
        g.conv3.data = dw3;
        let dd0 = layers::upsample2_backward(&du1);
        let (dx, dwd, dbd) = layers::linear_backward(&cache.x, &self.fc_dec.weight.data, &dd0, batch, q, flat);
        g.fc_dec.weight.data = dwd;
        g.fc_dec.bias.data = dbd;

        // reparameterization + KL
        let mut dmu = vec![0.0; batch * q];
        let mut dlv = vec![0.0; batch * q];
        for i in 0..batch * q {
            let lv = cache.log_var[i];
            let sigma = (0.5 * lv).exp();
            dmu[i] = dx[i] + beta * cache.mu[i] * inv_b;
            dlv[i] = dx[i] * cache.eps[i] * 0.5 * sigma + beta * 0.5 * (lv.exp() - 1.0) * inv_b;
        }

        // encoder heads
        let (dh_mu, dwm, dbm) = layers::linear_backward(&cache.h, &self.fc_mu.weight.data, &dmu, batch, flat, q);
        let (dh_lv, dwl, dbl) = layers::linear_backward(&cache.h, &self.fc_logvar.weight.data, &dlv, batch, flat, q);
        g.fc_mu.weight.data = dwm;
        g.fc_mu.bias.data = dbm;
        g.fc_logvar.weight.data = dwl;
        g.fc_logvar.bias.data = dbl;
        let dh: Vec<f64> = dh_mu.iter().zip(&dh_lv).map(|(a, b)| a + b).collect();

        // encoder body
        let mut dr2 = layers::maxpool2_backward(&dh, &cache.h_arg, cache.r2.len());
        layers::relu_backward_in_place(&mut dr2, &cache.r2);
        let (da2, dg2, dbe2) = layers::batchnorm_backward(
            &dr2,
            &cache.bn2.xhat,
            &cache.bn2.var,
            &self.bn2.gamma.data,
            BN_EPS,
            batch,
            c2,
            m / 2,
        );
        g.bn2.gamma.data = dg2;
        g.bn2.beta.data = dbe2;
        let (dp1, dw2, _) = layers::conv1d_backward(&cache.p1, &self.conv2.data, &da2, batch, c1, c2, m / 2);
        g.conv2.data = dw2;
        let mut dr1 = layers::maxpool2_backward(&dp1, &cache.p1_arg, cache.r1.len());
        layers::relu_backward_in_place(&mut dr1, &cache.r1);
        let (da1, dg1, dbe1) = layers::batchnorm_backward(
            &dr1,
            &cache.bn1.xhat,
            &cache.bn1.var,
            &self.bn1.gamma.data,
            BN_EPS,
            batch,
            c1,
            m,
        );
        g.bn1.gamma.data = dg1;
        g.bn1.beta.data = dbe1;
        let (_, dw1, _) = layers::conv1d_backward(&cache.input, &self.conv1.data, &da1, batch, 2, c1, m);
        g.conv1.data = dw1;
        Ok(g)
    }

    /// Eval-mode mean-latent reconstruction `[batch][2][m]`.
    pub fn reconstruct(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(input, Mode::Eval, Latent::Mean)?.output)
    }

    /// `||input - reconstruction||^2` per sample (eval mode, x = μ).
    pub fn reconstruction_errors(&self, input: &[f64]) -> Result<Vec<f64>> {
        let out = self.reconstruct(input)?;
        let n = self.arch.input_len();
        Ok(input
            .chunks_exact(n)
            .zip(out.chunks_exact(n))
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
            .collect())
    }
}

/// Per-tensor comparison of analytic and central-difference gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub name: &'static str,
    /// `||g_analytic - g_fd|| / max(||g_analytic||, ||g_fd||)`
    pub rel_error: f64,
    pub analytic_norm: f64,
}

/// Central finite differences of the batch-mean total loss (train-mode BN,
/// frozen `eps`) against [`VaeParams::backward`], for every trainable tensor.
pub fn gradient_check(params: &VaeParams, input: &[f64], eps: &[f64], beta: f64, step: f64) -> Result<Vec<GradCheck>> {
    let cache = params.forward(input, Mode::Train, Latent::Sampled(eps))?;
    let analytic = params.backward(&cache, beta)?.trainable();
    let mut probe = params.clone();
    let mut out = Vec::with_capacity(analytic.len());
    for (k, (name, g)) in analytic.iter().enumerate() {
        let mut diff2 = 0.0;
        let mut fd2 = 0.0;
        for i in 0..g.numel() {
            let orig = probe.trainable_mut()[k].1.data[i];
            probe.trainable_mut()[k].1.data[i] = orig + step;
            let up = probe.batch_loss(input, eps, beta)?.total;
            probe.trainable_mut()[k].1.data[i] = orig - step;
            let down = probe.batch_loss(input, eps, beta)?.total;
            probe.trainable_mut()[k].1.data[i] = orig;
            let fd = (up - down) / (2.0 * step);
            diff2 += (fd - g.data[i]).powi(2);
            fd2 += fd * fd;
        }
        let an = g.data.iter().map(|v| v * v).sum::<f64>().sqrt();
        let denom = an.max(fd2.sqrt());
        out.push(GradCheck {
            name,
            rel_error: if denom > 0.0 { diff2.sqrt() / denom } else { 0.0 },
            analytic_norm: an,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
