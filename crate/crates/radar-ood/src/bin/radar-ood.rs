use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{error, info, warn};

use radar_ood::config::Config;
use radar_ood::montecarlo::{with_workers, worker_count, WORKERS_ENV};
use radar_ood::pipeline::{self, Purpose};
use radar_ood::{AppError, Result};
use radar_ood_core::scenario::Hypothesis;

/// Radar target detection workbench: classical adaptive detectors versus a
/// VAE anomaly detector, compared by Monte Carlo at fixed false-alarm rate.
#[derive(Debug, Parser)]
#[command(name = "radar-ood", version)]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,

    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

/// Every flag below overrides the key of the same name in the config.
#[derive(Debug, Args)]
struct Overrides {
    /// TOML config file (all keys required); built-in defaults otherwise.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Generic override, e.g. `--set scenario.rho=0.9` (repeatable).
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    set: Vec<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// cgn_awgn, ccgn or ccgn_awgn.
    #[arg(long, global = true)]
    scenario: Option<String>,
    /// Detector ids (mf, nmf, amf_scm, anmf_scm, anmf_fp, vae); repeatable or comma separated.
    #[arg(long = "detector", global = true, value_delimiter = ',')]
    detectors: Vec<String>,
    #[arg(long, global = true)]
    pfa: Option<f64>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    #[arg(long = "eval-count", global = true)]
    eval_count: Option<usize>,
    #[arg(long, global = true)]
    doppler: Option<usize>,
    #[arg(long = "snr-min", global = true, allow_negative_numbers = true)]
    snr_min: Option<f64>,
    #[arg(long = "snr-max", global = true, allow_negative_numbers = true)]
    snr_max: Option<f64>,
    #[arg(long = "snr-step", global = true)]
    snr_step: Option<f64>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long, global = true)]
    lr: Option<f64>,
    #[arg(long, global = true)]
    latent: Option<usize>,
    /// KL weight.
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long = "batch-size", global = true)]
    batch_size: Option<usize>,
    #[arg(long = "n-samples", global = true)]
    n_samples: Option<usize>,
    /// time_iq or fft_magnitude.
    #[arg(long = "input-mode", global = true)]
    input_mode: Option<String>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    weights: Option<PathBuf>,
    /// Calibration records to use instead of calibrating in-process.
    #[arg(long, global = true)]
    thresholds: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PurposeArg {
    Train,
    Eval,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum HypothesisArg {
    H0,
    H1,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a snapshot dataset file.
    GenData {
        #[arg(long, value_enum, default_value = "train")]
        purpose: PurposeArg,
        #[arg(long, value_enum, default_value = "h0")]
        hypothesis: HypothesisArg,
        /// Target SNR in dB (H1 only).
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        snr: f64,
        /// Snapshot count; defaults to train.n_samples.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Train the VAE on target-free data and write the weight file.
    Train {
        /// RDS1 file of H0 snapshots; generated from the config otherwise.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Calibrate detector thresholds at the configured PFA.
    Calibrate {
        /// Calibrate every Doppler bin rather than only the configured one.
        #[arg(long)]
        all_bins: bool,
    },
    /// Measure false-alarm rates on fresh target-free trials.
    PfaCheck,
    /// Pd against SNR at one Doppler bin.
    PdCurve {
        /// Also render an SVG line plot here.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Pd over every Doppler bin and the SNR grid.
    DopplerMap,
    /// VAE reconstruction-error histograms under H0 and H1.
    Histogram,
    /// Render a Pd CSV file as SVG.
    Plot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
}

fn build_config(o: &Overrides) -> Result<Config> {
    let mut cfg = match &o.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    for s in &o.set {
        cfg.set(s)?;
    }
    let mut set = |key: &str, v: Option<String>| v.map_or(Ok(()), |v| cfg.set(&format!("{key}={v}")));
    let q = |s: &Option<String>| s.as_ref().map(|v| format!("{v:?}"));
    let p = |s: &Option<PathBuf>| s.as_ref().map(|v| format!("{:?}", v.display().to_string()));
    set("seed", o.seed.map(|v| v.to_string()))?;
    set("scenario.noise_kind", q(&o.scenario))?;
    set("scenario.doppler_bin", o.doppler.map(|v| v.to_string()))?;
    set("scenario.snr_min", o.snr_min.map(|v| v.to_string()))?;
    set("scenario.snr_max", o.snr_max.map(|v| v.to_string()))?;
    set("scenario.snr_step", o.snr_step.map(|v| v.to_string()))?;
    set("calibrate.pfa", o.pfa.map(|v| v.to_string()))?;
    set("calibrate.eval_count", o.eval_count.map(|v| v.to_string()))?;
    set("run.trials", o.trials.map(|v| v.to_string()))?;
    if !o.detectors.is_empty() {
        let list: Vec<String> = o.detectors.iter().map(|d| format!("{d:?}")).collect();
        set("run.detectors", Some(format!("[{}]", list.join(", "))))?;
    }
    set("train.epochs", o.epochs.map(|v| v.to_string()))?;
    set("train.learning_rate", o.lr.map(|v| v.to_string()))?;
    set("train.latent_dim", o.latent.map(|v| v.to_string()))?;
    set("train.beta", o.beta.map(|v| v.to_string()))?;
    set("train.batch_size", o.batch_size.map(|v| v.to_string()))?;
    set("train.n_samples", o.n_samples.map(|v| v.to_string()))?;
    set("train.input_mode", q(&o.input_mode))?;
    set("paths.out_dir", p(&o.out))?;
    set("paths.weights", p(&o.weights))?;
    set("paths.thresholds", p(&o.thresholds))?;
    // Surface bad values before any work starts.
    cfg.scenario_spec()?;
    cfg.detectors()?;
    cfg.pfa()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = build_config(&cli.overrides)?;
    match cli.command {
        Command::GenData {
            purpose,
            hypothesis,
            snr,
            count,
            output,
        } => {
            let purpose = match purpose {
                PurposeArg::Train => Purpose::Train,
                PurposeArg::Eval => Purpose::Eval,
            };
            let hypothesis = match hypothesis {
                HypothesisArg::H0 => Hypothesis::H0,
                HypothesisArg::H1 => Hypothesis::H1,
            };
            pipeline::gen_data(&cfg, purpose, hypothesis, snr, count.unwrap_or(cfg.train.n_samples), output)?;
        }
        Command::Train { dataset } => {
            pipeline::train(&cfg, dataset.as_deref())?;
        }
        Command::Calibrate { all_bins } => {
            let bins: Vec<usize> = if all_bins {
                (0..cfg.scenario.m).collect()
            } else {
                vec![cfg.scenario.doppler_bin]
            };
            pipeline::calibrate(&cfg, &bins)?;
        }
        Command::PfaCheck => {
            let checks = pipeline::pfa_check(&cfg)?;
            for c in &checks {
                info!(
                    "{}: empirical PFA {:.5} (target {}, 3 sigma {:.5})",
                    c.detector,
                    c.empirical_pfa,
                    c.target_pfa,
                    3.0 * c.sigma()
                );
            }
            if let Some(bad) = checks.iter().find(|c| !c.within_3_sigma()) {
                return Err(bad.to_error());
            }
        }
        Command::PdCurve { plot } => {
            let curves = pipeline::pd_curve(&cfg, plot.as_deref())?;
            pipeline::enforce_pfa(&curves)?;
        }
        Command::DopplerMap => {
            let (_, curves) = pipeline::doppler_map(&cfg)?;
            pipeline::enforce_pfa(&curves)?;
        }
        Command::Histogram => {
            pipeline::histogram(&cfg)?;
        }
        Command::Plot { input, output } => {
            for p in pipeline::plot(&input, &output)? {
                info!("wrote {}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.quiet { log::LevelFilter::Warn } else { log::LevelFilter::Info })
        .format_target(false)
        .init();
    let workers = worker_count();
    if std::env::var_os(WORKERS_ENV).is_some() {
        warn!("{WORKERS_ENV} = {workers}");
    }
    match with_workers(workers, || run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &AppError) -> u8 {
    e.exit_code()
}
