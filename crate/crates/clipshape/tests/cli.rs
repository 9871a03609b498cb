//! Interface tests of the batch front end: config handling, exit codes and
//! artifact layout.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_clipshape"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().unwrap()
}

fn small_cfg(dir: &Path, extra: &str) -> std::path::PathBuf {
    let p = dir.join("cfg.json");
    let body = format!(
        r#"{{"num_symbols": 20000, "k_min": 1.5, "k_max": 3.5, "k_step": 0.5{}{extra}}}"#,
        if extra.is_empty() { "" } else { ", " }
    );
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn empty_config_runs_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.json");
    std::fs::write(&cfg, "").unwrap();
    let out = run(
        &[
            "papr-sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            "o",
            "--k-min",
            "1.5",
            "--k-max",
            "3.5",
            "--k-step",
            "0.5",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("o/papr.csv")).unwrap();
    assert!(csv.starts_with("k,papr_db\n"));
    assert!(csv.trim_end().ends_with("# manifest: manifest.json"));
    // Manifest echoes the fully resolved config.
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "papr-sweep");
    assert_eq!(manifest["config"]["alpha"], 0.2);
    assert_eq!(manifest["config"]["fec_threshold"], 5.0 / 6.0);
    assert_eq!(manifest["config"]["k_step"], 0.5);
}

#[test]
fn out_of_range_value_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"alpha": 1.5}"#).unwrap();
    let out = run(&["papr-sweep", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("alpha"), "stderr: {err}");
}

#[test]
fn unknown_key_is_rejected_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"allpha": 0.2}"#).unwrap();
    let out = run(&["papr-sweep", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("allpha"), "stderr: {err}");
}

#[test]
fn infeasible_scenario_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_cfg(dir.path(), r#""peak_power_dbm": -80.0"#);
    let out = run(
        &["budget-sweep", "--pmf", "ud", "--config", cfg.to_str().unwrap(), "--out", "o"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no budget"));
}

#[test]
fn unwritable_output_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // A file where the output directory should go.
    std::fs::write(dir.path().join("blocked"), "x").unwrap();
    let cfg = small_cfg(dir.path(), "");
    let out = run(
        &["papr-sweep", "--config", cfg.to_str().unwrap(), "--out", "blocked/sub"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn budget_sweep_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_cfg(dir.path(), r#""loss_db_step": 5.0"#);
    let out = run(
        &["budget-sweep", "--pmf", "mb", "--config", cfg.to_str().unwrap(), "--out", "o"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let budget = std::fs::read_to_string(dir.path().join("o/budget.csv")).unwrap();
    assert!(budget.starts_with("k,budget_db\n"));
    let ngmi = std::fs::read_to_string(dir.path().join("o/ngmi_vs_loss.csv")).unwrap();
    assert!(ngmi.starts_with("k,loss_db,ngmi\n"));
    // NGMI column is non-increasing in loss.
    let vals: Vec<f64> = ngmi
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(vals.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{vals:?}");
    for svg in ["o/budget.svg", "o/ngmi_vs_loss.svg"] {
        assert!(dir.path().join(svg).exists());
    }
}

#[test]
fn cli_overrides_beat_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_cfg(dir.path(), r#""seed": 3, "dac_bits": 8"#);
    let out = run(
        &[
            "b2b-sweep",
            "--pmf",
            "ud",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            "o",
            "--seed",
            "7",
            "--dac-bits",
            "6",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["config"]["seed"], 7);
    assert_eq!(manifest["config"]["dac_bits"], 6);
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_cfg(dir.path(), "");
    for out_dir in ["a", "b"] {
        let out = run(
            &["papr-sweep", "--pmf", "mb", "--config", cfg.to_str().unwrap(), "--out", out_dir],
            dir.path(),
        );
        assert!(out.status.success());
    }
    for f in ["papr.csv", "papr.svg", "manifest.json"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
}
