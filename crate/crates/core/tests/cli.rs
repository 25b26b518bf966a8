use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_squid-grover"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn csv(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn fig3_header_and_first_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["run", "--experiment", "fig3", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv(&dir.path().join("fig3.csv"));
    assert_eq!(rows[0], ["gamma3_over_g", "favg_analytic", "favg_simulated"]);
    assert_eq!(rows[1], ["0", "1", "1"]);
    assert_eq!(rows.len(), 1 + 21);
    let text = fs::read_to_string(dir.path().join("fig3.csv")).unwrap();
    assert!(!text.contains('\r') && text.ends_with('\n'));
}

#[test]
fn manifest_checksums_match_files() {
    use sha2::{Digest, Sha256};
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["run", "--experiment", "schedule", "--seed", "4", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 4);
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    let files = manifest["files"].as_array().unwrap();
    assert_eq!(files.len(), 2);
    for f in files {
        let bytes = fs::read(dir.path().join(f["name"].as_str().unwrap())).unwrap();
        let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(f["sha256"].as_str().unwrap(), digest);
    }
    let dump = fs::read_to_string(dir.path().join("schedule.txt")).unwrap();
    assert_eq!(dump.lines().count(), 17);
}

#[test]
fn identical_config_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"experiment": "fig6", "samples": 20, "seed": 3, "grid": {"gamma3_over_g": [0, 0.004], "kappa_over_g": [0.002, 0.007]}}"#).unwrap();
    let mut texts = Vec::new();
    for name in ["a", "b"] {
        let out_dir = dir.path().join(name);
        let out = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        texts.push(fs::read(out_dir.join("fig6.csv")).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
    // 2 × 2 grid plus header
    assert_eq!(String::from_utf8_lossy(&texts[0]).lines().count(), 5);
}

#[test]
fn flags_override_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"experiment": "fig3", "iterations": 2}"#).unwrap();
    let out = run(&[
        "run", "--config", cfg.to_str().unwrap(), "--experiment", "grover",
        "--set", "iterations=6", "--out", dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv(&dir.path().join("grover.csv"));
    assert_eq!(rows.len(), 1 + 7);
    let p6: f64 = rows[7][1].parse().unwrap();
    assert!((p6 - 0.9998).abs() < 1e-4);
}

#[test]
fn negative_rate_is_a_config_error() {
    let out = run(&["run", "--experiment", "fig3", "--set", "device.kappa=-1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("device.kappa"));
}

#[test]
fn validate_lists_every_violation() {
    let out = run(&["validate", "--set", "device.gamma3=-1", "--set", "grid.kappa_over_g=[]", "--set", "bogus=1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for key in ["device.gamma3", "grid.kappa_over_g", "bogus"] {
        assert!(err.contains(key), "{key} missing in {err}");
    }
    let ok = run(&["validate"]);
    assert_eq!(ok.status.code(), Some(0));
}

#[test]
fn unknown_experiment_lists_valid_ids() {
    let out = run(&["run", "--experiment", "fig9"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("fig3") && err.contains("grover") && err.contains("schedule"));
}

#[test]
fn overdamped_grid_is_a_numerical_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["run", "--experiment", "fig3", "--set", "grid.gamma3_over_g=[2.5]", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn timing_reports_thirteen_ns_gate() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["run", "--experiment", "timing", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv(&dir.path().join("timing.csv"));
    let gate = rows.iter().find(|r| r[0] == "tau_gate").unwrap();
    let ns: f64 = gate[2].parse().unwrap();
    assert!((ns - 12.985).abs() < 1e-3);
}

#[test]
fn list_experiments_names_all() {
    let out = run(&["list-experiments"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().count(), 10);
}

#[test]
fn example_config_validates() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.json");
    let out = run(&["validate", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}
