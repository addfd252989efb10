//! Run configuration: a sectioned TOML file plus `section.key=value`
//! overrides. A config file must spell out every key; without one the
//! built-in defaults apply.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use radar_ood_core::detectors::DetectorKind;
use radar_ood_core::estimators::EstimatorConfig;
use radar_ood_core::scenario::{NoiseKind, ScenarioSpec};
use radar_ood_core::vae::{InputMode, TrainConfig};

use crate::error::{AppError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub scenario: ScenarioSection,
    pub estimator: EstimatorSection,
    pub train: TrainSection,
    pub calibrate: CalibrateSection,
    pub run: RunSection,
    pub paths: PathsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    /// `cgn_awgn`, `ccgn` or `ccgn_awgn`.
    pub noise_kind: String,
    pub m: usize,
    pub rho: f64,
    /// Gamma texture shape.
    pub mu: f64,
    /// Clutter-to-thermal power ratio.
    pub r: f64,
    /// Secondary snapshots per trial.
    pub k: usize,
    pub doppler_bin: usize,
    pub snr_min: f64,
    pub snr_max: f64,
    pub snr_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    /// H0 snapshots generated for training; two thirds train, one third validates.
    pub n_samples: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Weight of the KL term (sometimes written alpha; here alpha is the
    /// target amplitude).
    pub beta: f64,
    pub batch_size: usize,
    pub latent_dim: usize,
    /// `time_iq` or `fft_magnitude`.
    pub input_mode: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateSection {
    pub pfa: f64,
    /// H0 trials per threshold.
    pub eval_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub trials: usize,
    pub detectors: Vec<String>,
    pub histogram_snr: Vec<f64>,
    pub histogram_samples: usize,
    pub histogram_bins: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsSection {
    pub out_dir: PathBuf,
    /// Empty means `<out_dir>/vae_<scenario>.rvae`.
    pub weights: PathBuf,
    /// Empty means calibrate in-process.
    pub thresholds: PathBuf,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 0,
            scenario: ScenarioSection {
                noise_kind: "ccgn_awgn".into(),
                m: 16,
                rho: 0.5,
                mu: 1.0,
                r: 1.0,
                k: 32,
                doppler_bin: 0,
                snr_min: 0.0,
                snr_max: 25.0,
                snr_step: 1.0,
            },
            estimator: EstimatorSection {
                tol: 1e-8,
                max_iter: 200,
            },
            train: TrainSection {
                n_samples: 15_000,
                epochs: 50,
                learning_rate: 1e-3,
                beta: 100.0,
                batch_size: 128,
                latent_dim: 12,
                input_mode: "time_iq".into(),
            },
            calibrate: CalibrateSection {
                pfa: 1e-2,
                eval_count: 100_000,
            },
            run: RunSection {
                trials: 10_000,
                detectors: DetectorKind::ALL.iter().map(|d| d.id().to_string()).collect(),
                histogram_snr: vec![5.0, 10.0, 15.0],
                histogram_samples: 10_000,
                histogram_bins: 60,
            },
            paths: PathsSection {
                out_dir: "out".into(),
                weights: PathBuf::new(),
                thresholds: PathBuf::new(),
            },
        }
    }
}

fn cfg_err(msg: impl Into<String>) -> AppError {
    AppError::Config(msg.into())
}

/// Parse a scalar override: TOML literal if it parses, bare string otherwise.
fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match toml::from_str::<toml::Table>(&doc) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| cfg_err(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            AppError::Config(msg) => cfg_err(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Apply `section.key=value` (or `key=value` for top-level keys).
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (path, raw) = assignment
            .split_once('=')
            .ok_or_else(|| cfg_err(format!("override `{assignment}` is not key=value")))?;
        let mut root = toml::Value::try_from(&*self).map_err(|e| cfg_err(e.to_string()))?;
        let mut slot = &mut root;
        for part in path.trim().split('.') {
            slot = slot
                .as_table_mut()
                .and_then(|t| t.get_mut(part))
                .ok_or_else(|| cfg_err(format!("unknown config key `{}`", path.trim())))?;
        }
        let value = parse_value(raw.trim());
        // Integers are accepted where floats are expected.
        *slot = match (&*slot, value) {
            (toml::Value::Float(_), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
            (toml::Value::Array(_), toml::Value::String(s)) => {
                toml::Value::Array(s.split(',').map(|p| parse_value(p.trim())).collect())
            }
            (_, v) => v,
        };
        *self = root.try_into().map_err(|e: toml::de::Error| cfg_err(format!("{}: {e}", path.trim())))?;
        Ok(())
    }

    /// Hex SHA-256 of the canonical TOML rendering.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn noise_kind(&self) -> Result<NoiseKind> {
        self.scenario.noise_kind.parse().map_err(|e: radar_ood_core::Error| cfg_err(e.to_string()))
    }

    pub fn snr_grid(&self) -> Result<Vec<f64>> {
        let s = &self.scenario;
        if !(s.snr_step > 0.0) || !(s.snr_max >= s.snr_min) {
            return Err(cfg_err("SNR grid needs snr_step > 0 and snr_max >= snr_min"));
        }
        let n = ((s.snr_max - s.snr_min) / s.snr_step + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| s.snr_min + i as f64 * s.snr_step).collect())
    }

    pub fn scenario_spec(&self) -> Result<ScenarioSpec> {
        let s = &self.scenario;
        let spec = ScenarioSpec {
            noise_kind: self.noise_kind()?,
            m: s.m,
            rho: s.rho,
            mu: s.mu,
            r: s.r,
            k: s.k,
            doppler_bin: s.doppler_bin,
            snr_db: self.snr_grid()?,
            seed: self.seed,
        };
        spec.validate().map_err(|e| cfg_err(e.to_string()))?;
        Ok(spec)
    }

    pub fn estimator(&self) -> Result<EstimatorConfig> {
        let e = EstimatorConfig {
            tol: self.estimator.tol,
            max_iter: self.estimator.max_iter,
            normalize_trace: true,
        };
        e.validate().map_err(|e| cfg_err(e.to_string()))?;
        Ok(e)
    }

    pub fn input_mode(&self) -> Result<InputMode> {
        match self.train.input_mode.as_str() {
            "time_iq" => Ok(InputMode::TimeIq),
            "fft_magnitude" => Ok(InputMode::FftMagnitude),
            other => Err(cfg_err(format!("input_mode `{other}`: expected time_iq or fft_magnitude"))),
        }
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        let t = &self.train;
        let cfg = TrainConfig {
            epochs: t.epochs,
            learning_rate: t.learning_rate,
            beta: t.beta,
            batch_size: t.batch_size,
            latent_dim: t.latent_dim,
            seed: self.seed,
            input_mode: self.input_mode()?,
        };
        cfg.validate().map_err(|e| cfg_err(e.to_string()))?;
        Ok(cfg)
    }

    pub fn detectors(&self) -> Result<Vec<DetectorKind>> {
        if self.run.detectors.is_empty() {
            return Err(cfg_err("run.detectors is empty"));
        }
        let mut out: Vec<DetectorKind> = self
            .run
            .detectors
            .iter()
            .map(|d| d.parse().map_err(|e: radar_ood_core::Error| cfg_err(e.to_string())))
            .collect::<Result<_>>()?;
        out.sort_by_key(|d| d.index());
        out.dedup();
        Ok(out)
    }

    pub fn pfa(&self) -> Result<f64> {
        let p = self.calibrate.pfa;
        if !(p > 0.0 && p < 1.0) {
            return Err(cfg_err("calibrate.pfa must lie in (0, 1)"));
        }
        Ok(p)
    }

    pub fn weights_path(&self) -> Result<PathBuf> {
        Ok(if self.paths.weights.as_os_str().is_empty() {
            self.paths.out_dir.join(format!("vae_{}.rvae", self.noise_kind()?))
        } else {
            self.paths.weights.clone()
        })
    }

    pub fn output(&self, name: &str) -> PathBuf {
        self.paths.out_dir.join(name)
    }
}
