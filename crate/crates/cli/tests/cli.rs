use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_matterwave"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn verify_defaults_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["--out", dir.path().to_str().unwrap(), "--samples", "20000"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&dir.path().join("verify.json"));
    assert_eq!(v["mode"], "verify");
    assert_eq!(v["results"]["passed"], true);
    assert_eq!(v["seed"], 20_240_601);
}

#[test]
fn verify_failure_exits_two() {
    // momentum_scale far above the balanced value pushes the budget past four times the SQL
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "samples = 20000\n[budget]\nmomentum_scale = 3.0\n").unwrap();
    let out = run(&[
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&dir.path().join("verify.json"));
    assert_eq!(v["results"]["passed"], false);
}

#[test]
fn sweep_minimum_near_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["--mode", "sweep", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&dir.path().join("result.json"));
    let grid = v["results"]["grid_minimum"]["atom_number"].as_f64().unwrap();
    let best = 2f64.sqrt() * 1e6;
    assert!((grid / best - 1.0).abs() < 2e-2, "{grid}");
    let exact = v["results"]["optimum"]["atom_number"].as_f64().unwrap();
    assert!((exact / best - 1.0).abs() < 1e-12);

    let hash = v["config_hash"].as_str().unwrap();
    let mut rd = csv::Reader::from_path(dir.path().join("budget_sweep.csv")).unwrap();
    assert_eq!(&rd.headers().unwrap()[0], "config_hash");
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 601);
    assert!(rows.iter().all(|r| &r[0] == hash && &r[1] == "20240601"));
    assert!(dir.path().join("gw_response.csv").exists());
}

#[test]
fn single_with_zero_phases_has_zero_mean() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "--mode",
        "single",
        "--samples",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&dir.path().join("result.json"));
    let mean = v["results"]["sequence"]["delta_n_mean"].as_f64().unwrap();
    assert!(mean.abs() < 1e-9, "{mean}");
    assert!(v["results"]["sampled_delta_n"].is_null());
    assert!(v["note"].as_str().unwrap().contains("scaling"));
}

#[test]
fn pair_reports_sampled_covariance() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "--mode",
        "pair",
        "--samples",
        "5000",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&dir.path().join("result.json"));
    assert_eq!(v["results"]["link"], "shared");
    assert!(v["results"]["covariance"].as_f64().unwrap() > 0.0);
    assert_eq!(v["results"]["sampled"]["samples"], 5000);
}

#[test]
fn unknown_field_exits_one_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "mode = \"budget\"\n\n[model]\nomgea = 2.0\n").unwrap();
    let out = run(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("omgea") && err.contains("line 4"), "{err}");
}

#[test]
fn invalid_value_exits_one_with_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "mode = \"budget\"\n[budget]\nphoton_number = -1.0\n").unwrap();
    let out = run(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("budget.photon_number"), "{err}");
}

#[test]
fn echo_reproduces_hash() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let out = run(&[
        "--mode",
        "budget",
        "--seed",
        "7",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let before = json(&first.join("result.json"))["config_hash"].clone();
    let echo = first.join("config.echo.toml");
    let copy = dir.path().join("echo.toml");
    fs::copy(&echo, &copy).unwrap();
    fs::remove_dir_all(&first).unwrap();
    let out = run(&["--config", copy.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&first.join("result.json"));
    assert_eq!(v["config_hash"], before);
    assert_eq!(v["seed"], 7);
    let again = fs::read_to_string(&echo).unwrap();
    assert_eq!(again, fs::read_to_string(&copy).unwrap());
}
