//! Mini-batch training loop.

use alloc::vec::Vec;

use super::{batch_input, Adam, AdamConfig, InputMode, Latent, LossBreakdown, Mode, VaeArch, VaeParams};
use crate::error::{Error, Result};
use crate::linalg::ComplexVec;
use crate::rng::{stream_tag, tags, RadarRng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// KL weight.
    pub beta: f64,
    pub batch_size: usize,
    pub latent_dim: usize,
    pub seed: u64,
    pub input_mode: InputMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            learning_rate: 1e-3,
            beta: 100.0,
            batch_size: 128,
            latent_dim: 12,
            seed: 0,
            input_mode: InputMode::TimeIq,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs", "must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate", "must be positive and finite"));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid("beta", "must be nonnegative and finite"));
        }
        if self.batch_size < 2 {
            return Err(Error::invalid("batch_size", "batch norm needs at least 2 samples"));
        }
        if self.latent_dim == 0 {
            return Err(Error::invalid("latent_dim", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Sample-weighted mean over the epoch's mini-batches (train mode).
    pub train: LossBreakdown,
    /// Eval-mode loss on the held-out third with a fixed noise draw.
    pub val: LossBreakdown,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: VaeParams,
    pub history: Vec<EpochStats>,
}

fn draw_eps(rng: &mut RadarRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.normal()).collect()
}

fn add_scaled(acc: &mut LossBreakdown, l: LossBreakdown, w: f64) {
    acc.total += w * l.total;
    acc.rec += w * l.rec;
    acc.kl += w * l.kl;
}

fn eval_loss(params: &VaeParams, input: &[f64], eps: &[f64], beta: f64, chunk: usize) -> Result<LossBreakdown> {
    let n = params.arch.input_len();
    let q = params.arch.latent;
    let count = input.len() / n;
    let mut acc = LossBreakdown::default();
    for (xs, es) in input.chunks(chunk * n).zip(eps.chunks(chunk * q)) {
        let cache = params.forward(xs, Mode::Eval, Latent::Sampled(es))?;
        let l = params.loss(&cache, beta);
        add_scaled(&mut acc, l, cache.batch as f64 / count as f64);
    }
    Ok(acc)
}

/// Train on noise-only snapshots. The first two thirds train, the rest
/// validate. Weights are snapped to `f32` at the end.
pub fn train(dataset: &[ComplexVec], cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_with_progress(dataset, cfg, |_| {})
}

pub fn train_with_progress<F: FnMut(&EpochStats)>(
    dataset: &[ComplexVec],
    cfg: &TrainConfig,
    mut progress: F,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let first = dataset.first().ok_or(Error::Empty("training set"))?;
    let m = first.len();
    if dataset.iter().any(|z| z.len() != m) {
        return Err(Error::invalid("dataset", "snapshots differ in length"));
    }
    let n_train = 2 * dataset.len() / 3;
    let n_val = dataset.len() - n_train;
    if n_train < 2 || n_val < 1 {
        return Err(Error::InsufficientData {
            found: dataset.len(),
            required: 4,
        });
    }
    let arch = VaeArch {
        m,
        latent: cfg.latent_dim,
        input_mode: cfg.input_mode,
        ..VaeArch::default()
    };
    let mut params = VaeParams::init(arch, &mut RadarRng::substream(cfg.seed, stream_tag(tags::VAE_INIT, 0), 0))?;
    let mut adam = Adam::new(
        &params,
        AdamConfig {
            lr: cfg.learning_rate,
            ..AdamConfig::default()
        },
    );

    let refs: Vec<&ComplexVec> = dataset.iter().collect();
    let n = arch.input_len();
    let q = arch.latent;
    let train_input = batch_input(&refs[..n_train], cfg.input_mode);
    let val_input = batch_input(&refs[n_train..], cfg.input_mode);
    let val_eps = draw_eps(
        &mut RadarRng::substream(cfg.seed, stream_tag(tags::VAE_VALIDATION, 0), 0),
        n_val * q,
    );

    let mut order: Vec<usize> = (0..n_train).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut batch_buf = Vec::with_capacity(cfg.batch_size * n);
    for epoch in 0..cfg.epochs {
        let mut shuffle_rng = RadarRng::substream(cfg.seed, stream_tag(tags::VAE_SHUFFLE, 0), epoch as u64);
        let mut eps_rng = RadarRng::substream(cfg.seed, stream_tag(tags::VAE_EPS, 0), epoch as u64);
        shuffle_rng.shuffle(&mut order);
        let mut acc = LossBreakdown::default();
        let mut seen = 0usize;
        for idx in order.chunks(cfg.batch_size) {
            // A single leftover sample has no batch variance.
            if idx.len() < 2 {
                continue;
            }
            batch_buf.clear();
            for &i in idx {
                batch_buf.extend_from_slice(&train_input[i * n..(i + 1) * n]);
            }
            let eps = draw_eps(&mut eps_rng, idx.len() * q);
            let cache = params.forward(&batch_buf, Mode::Train, Latent::Sampled(&eps))?;
            let loss = params.loss(&cache, cfg.beta);
            if !loss.total.is_finite() {
                return Err(Error::NonFinite("training loss"));
            }
            let grads = params.backward(&cache, cfg.beta)?;
            params.update_running_stats(&cache);
            adam.step(&mut params, &grads)?;
            add_scaled(&mut acc, loss, idx.len() as f64);
            seen += idx.len();
        }
        let inv = 1.0 / seen as f64;
        let train = LossBreakdown {
            total: acc.total * inv,
            rec: acc.rec * inv,
            kl: acc.kl * inv,
        };
        let val = eval_loss(&params, &val_input, &val_eps, cfg.beta, 1024)?;
        let stats = EpochStats {
            epoch: epoch + 1,
            train,
            val,
        };
        progress(&stats);
        history.push(stats);
    }
    params.round_to_f32();
    Ok(TrainOutcome { params, history })
}
