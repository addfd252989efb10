use std::path::Path;
use std::process::{Command, Output};

use radar_ood::csv_io::{read_pd_csv, PD_HEADER};
use radar_ood::dataset_io::read_dataset;
use radar_ood::weights_io::load_weights;
use radar_ood_core::scenario::Hypothesis;

fn cli(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radar-ood"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RADAR_OOD_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const FAST: &[&str] = &["--trials", "200", "--eval-count", "1000", "--snr-min", "0", "--snr-max", "20", "--snr-step", "10"];

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(dir.path(), &["pd-curve", "--frobnicate"]);
    assert_eq!(code(&o), 2);
    let o = cli(dir.path(), &["not-a-command"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn help_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(dir.path(), &["--help"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for sub in ["gen-data", "train", "calibrate", "pfa-check", "pd-curve", "doppler-map", "histogram", "plot"] {
        assert!(text.contains(sub), "{sub} missing from help");
    }
}

#[test]
fn config_errors_exit_with_their_own_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("partial.toml");
    std::fs::write(&cfg, "seed = 1\n[scenario]\nm = 16\n").unwrap();
    let o = cli(dir.path(), &["--config", cfg.to_str().unwrap(), "pfa-check"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("missing field"), "{}", stderr(&o));

    let o = cli(dir.path(), &["--set", "scenario.rho=1.5", "pfa-check"]);
    assert_eq!(code(&o), 3);
    let o = cli(dir.path(), &["--detector", "kelly", "pd-curve"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn file_errors_exit_with_their_own_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(dir.path(), &["--config", "/nonexistent/cfg.toml", "pfa-check"]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("/nonexistent/cfg.toml"));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "x,y\n").unwrap();
    let o = cli(dir.path(), &["plot", "--input", bad.to_str().unwrap(), "--output", "/tmp/never.svg"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn missing_weights_for_vae_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(dir.path(), &["pd-curve", "--scenario", "ccgn_awgn", "--detector", "vae", "--pfa", "1e-2", "--trials", "10000", "--seed", "7"]);
    assert_eq!(code(&o), 5);
    let err = stderr(&o);
    assert!(err.contains("weights") && err.contains("vae_ccgn_awgn.rvae"), "{err}");
}

#[test]
fn pfa_violation_fails_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.toml");
    std::fs::write(
        &t,
        "[[threshold]]\ndetector = \"mf\"\nscenario = \"ccgn_awgn\"\ndoppler_bin = 0\npfa_target = 0.01\nlambda = 0.5\neval_count = 1000\nempirical_pfa = 0.01\nseed = 0\n",
    )
    .unwrap();
    let mut args = vec!["--detector", "mf", "--thresholds", t.to_str().unwrap(), "pd-curve"];
    args.extend_from_slice(FAST);
    let o = cli(dir.path(), &args);
    assert_eq!(code(&o), 7, "{}", stderr(&o));
    assert!(stderr(&o).contains("PFA"), "{}", stderr(&o));
}

#[test]
fn gen_data_writes_a_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h1.rds");
    let o = cli(
        dir.path(),
        &["--scenario", "ccgn", "gen-data", "--hypothesis", "h1", "--snr", "5", "--count", "12", "--output", path.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let data = read_dataset(&path).unwrap();
    assert_eq!(data.len(), 12);
    assert!(data.iter().all(|s| s.hypothesis == Hypothesis::H1 && s.texture.is_some()));
}

#[test]
fn train_then_detect() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(dir.path(), &["train", "--scenario", "ccgn_awgn", "--epochs", "2", "--lr", "1e-3", "--latent", "12", "--beta", "100", "--n-samples", "300", "--batch-size", "64"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let weights = dir.path().join("vae_ccgn_awgn.rvae");
    assert_eq!(load_weights(&weights).unwrap().arch.latent, 12);
    let history = std::fs::read_to_string(dir.path().join("train_ccgn_awgn_history.csv")).unwrap();
    assert_eq!(history.lines().count(), 3);

    let plot = dir.path().join("pd.svg");
    let mut args = vec!["--detector", "vae,amf_scm", "pd-curve", "--plot", plot.to_str().unwrap()];
    args.extend_from_slice(FAST);
    let o = cli(dir.path(), &args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let err = stderr(&o);
    assert!(err.contains("seed=0") && err.contains("config_sha256="), "{err}");
    let rows = read_pd_csv(&dir.path().join("pd_ccgn_awgn_d0.csv")).unwrap();
    assert_eq!(rows.len(), 6);
    assert!(std::fs::read_to_string(&plot).unwrap().matches("<polyline class=\"series\"").count() == 2);

    let o = cli(dir.path(), &["histogram", "--set", "run.histogram_samples=200"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.path().join("hist_ccgn_awgn.csv").exists());
    assert!(dir.path().join("hist_ccgn_awgn_overlap.csv").exists());
}

#[test]
fn calibrate_pfa_check_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["--scenario", "cgn_awgn", "--detector", "mf,nmf,anmf_scm", "calibrate"];
    args.extend_from_slice(FAST);
    assert_eq!(code(&cli(dir.path(), &args)), 0);
    let t = dir.path().join("thresholds_cgn_awgn.toml");
    assert!(t.exists());

    let mut args = vec!["--scenario", "cgn_awgn", "--detector", "mf,nmf,anmf_scm", "--thresholds", t.to_str().unwrap(), "pfa-check"];
    args.extend_from_slice(FAST);
    let o = cli(dir.path(), &args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let pfa = std::fs::read_to_string(dir.path().join("pfa_cgn_awgn_d0.csv")).unwrap();
    assert_eq!(pfa.lines().count(), 4);

    let mut args = vec!["--scenario", "cgn_awgn", "--detector", "mf,nmf,anmf_scm", "--thresholds", t.to_str().unwrap(), "pd-curve"];
    args.extend_from_slice(FAST);
    assert_eq!(code(&cli(dir.path(), &args)), 0);
    let csv = dir.path().join("pd_cgn_awgn_d0.csv");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), PD_HEADER.join(","));

    let svg = dir.path().join("fig.svg");
    let o = cli(dir.path(), &["plot", "--input", csv.to_str().unwrap(), "--output", svg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&svg).unwrap().matches("<polyline class=\"series\"").count(), 3);
}

#[test]
fn doppler_map_writes_heatmaps() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(
        dir.path(),
        &["--scenario", "cgn_awgn", "--detector", "mf,nmf", "--trials", "100", "--eval-count", "1000", "--snr-min", "0", "--snr-max", "10", "--snr-step", "5", "doppler-map"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rows = read_pd_csv(&dir.path().join("doppler_cgn_awgn.csv")).unwrap();
    assert_eq!(rows.len(), 2 * 16 * 3);
    for det in ["mf", "nmf"] {
        assert!(dir.path().join(format!("doppler_cgn_awgn_{det}.svg")).exists());
    }
}

#[test]
fn identical_runs_write_identical_csv() {
    let run = |workers: &str| {
        let dir = tempfile::tempdir().unwrap();
        let mut args = vec!["--scenario", "ccgn", "--detector", "nmf,anmf_fp", "--seed", "9", "pd-curve"];
        args.extend_from_slice(FAST);
        let o = Command::new(env!("CARGO_BIN_EXE_radar-ood"))
            .args(&args)
            .arg("--out")
            .arg(dir.path())
            .env("RADAR_OOD_WORKERS", workers)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        std::fs::read(dir.path().join("pd_ccgn_d0.csv")).unwrap()
    };
    assert_eq!(run("1"), run("3"));
}
