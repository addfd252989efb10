//! Adam with bias correction.

use alloc::vec;
use alloc::vec::Vec;

use super::VaeParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::invalid("learning_rate", "must be positive and finite"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::invalid("beta1/beta2", "must lie in [0, 1)"));
        }
        if !(self.eps > 0.0) {
            return Err(Error::invalid("eps", "must be positive"));
        }
        Ok(())
    }
}

/// Optimizer state: one pair of moment buffers per trainable tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: u64,
}

/// One bias-corrected Adam update of a flat slice at step `t >= 1`.
pub fn adam_update(p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], t: u64, cfg: &AdamConfig) {
    let c1 = 1.0 - cfg.beta1.powi(t as i32);
    let c2 = 1.0 - cfg.beta2.powi(t as i32);
    for i in 0..p.len() {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        let mhat = m[i] / c1;
        let vhat = v[i] / c2;
        p[i] -= cfg.lr * mhat / (vhat.sqrt() + cfg.eps);
    }
}

impl Adam {
    pub fn new(params: &VaeParams, config: AdamConfig) -> Self {
        let sizes: Vec<usize> = params.trainable().iter().map(|(_, t)| t.numel()).collect();
        Self {
            config,
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut VaeParams, grads: &VaeParams) -> Result<()> {
        self.t += 1;
        let grads = grads.trainable();
        let cfg = self.config;
        for (k, ((_, p), (_, g))) in params.trainable_mut().into_iter().zip(&grads).enumerate() {
            if p.shape != g.shape {
                return Err(Error::ShapeMismatch { name: "gradient" });
            }
            adam_update(&mut p.data, &g.data, &mut self.m[k], &mut self.v[k], self.t, &cfg);
        }
        if !params.is_finite() {
            return Err(Error::NonFinite("parameters after optimizer step"));
        }
        Ok(())
    }
}
