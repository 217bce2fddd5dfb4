use std::path::Path;
use std::process::Command;

use pillar_lens_cli::manifest::RunManifest;
use pillar_lens_cli::output::{exported_na, FarFieldSidecar};

const FAST: &[&str] = &["--set", "grid.N=128", "--set", "grid.pad_factor=2"];

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pillar-lens"));
    c.env_remove("PILLAR_LENS_OUT");
    c
}

fn run(args: &[&str], out: &Path) -> i32 {
    let status = bin()
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs");
    status.status.code().expect("exit code")
}

fn visible_files(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(dir)
        .map(|d| d.filter_map(|e| e.ok()).map(|e| e.file_name().to_string_lossy().into_owned()).collect())
        .unwrap_or_default();
    v.sort();
    v
}

#[test]
fn profile_table_matches_sag() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["profile", "--R", "1.2", "--k4", "0.75", "--samples", "5"], dir.path()), 0);
    let csv = std::fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "x,z");
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[1], "0,0");
    assert_eq!(rows[5], "1.2,2.7552");
    assert_eq!(visible_files(dir.path()), ["manifest.json", "profile.csv", "summary.json"]);
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["simulate", "--set", "grid.pitch=0.7"], dir.path()), 1);
    assert_eq!(run(&["profile", "--k4", "-0.1"], dir.path()), 1);
    assert_eq!(run(&["profile", "--set", "lens.kk4=1"], dir.path()), 1);
    assert_eq!(run(&["profile", "--no-such-flag"], dir.path()), 1);
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "grid.N = 256\nsource.mfdd = 2\n").unwrap();
    let out = bin().args(["profile", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":2:"));
    assert!(!dir.path().join("summary.json").exists());
}

#[test]
fn help_exits_cleanly() {
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("match-fiber"));
}

#[test]
fn numerical_failure_exits_with_two_and_leaves_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep-k", "--R", "1.2", "--set", "sweep.k=0", "--set", "sweep.bracket=1.2,1.5"];
    args.extend_from_slice(FAST);
    assert_eq!(run(&args, dir.path()), 2);
    assert!(visible_files(dir.path()).is_empty(), "{:?}", visible_files(dir.path()));
}

#[test]
fn simulate_writes_summary_and_far_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["simulate", "--R", "2", "--k4", "0.1"];
    args.extend_from_slice(FAST);
    assert_eq!(run(&args, dir.path()), 0);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    for key in ["eta_na", "eta_overlap", "mfd", "na", "eta014", "gaussianity", "bimodal"] {
        assert!(summary.get(key).is_some(), "missing {key}");
    }
    let csv = std::fs::read_to_string(dir.path().join("farfield.csv")).unwrap();
    let meta: FarFieldSidecar =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("farfield.json")).unwrap()).unwrap();
    let mut peak: f64 = 0.0;
    for line in csv.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        assert!(v[0] * v[0] + v[1] * v[1] <= 1.0 || v[2] == 0.0);
        peak = peak.max(v[2]);
    }
    assert_eq!(peak, 1.0);
    let na = summary["na"].as_f64().unwrap();
    assert!((exported_na(&csv, &meta).unwrap() / na - 1.0).abs() < 1e-6);

    // the design row reproduces the summary
    let design = std::fs::read_to_string(dir.path().join("design.csv")).unwrap();
    let row: Vec<&str> = design.lines().nth(1).unwrap().split(',').collect();
    let eta_overlap: f64 = row[11].parse().unwrap();
    assert!((eta_overlap / summary["eta_overlap"].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn summary_only_skips_bulk_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["simulate", "--bare", "--summary-only"];
    args.extend_from_slice(FAST);
    assert_eq!(run(&args, dir.path()), 0);
    assert_eq!(visible_files(dir.path()), ["design.csv", "manifest.json", "summary.json"]);
}

#[test]
fn rerun_from_manifest_is_byte_identical() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep-k4", "--R", "1.2", "--set", "sweep.k4=0:0.6:3"];
    args.extend_from_slice(FAST);
    assert_eq!(run(&args, first.path()), 0);
    let manifest = first.path().join("manifest.json");
    let out = bin().arg("rerun").arg(&manifest).arg("--out").arg(second.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let a = std::fs::read(first.path().join("sweep_k4.csv")).unwrap();
    let b = std::fs::read(second.path().join("sweep_k4.csv")).unwrap();
    assert_eq!(a, b);
    let m1 = RunManifest::load(&manifest).unwrap();
    let m2 = RunManifest::load(&second.path().join("manifest.json")).unwrap();
    assert!(m1.same_run(&m2));
}

#[test]
fn config_file_then_flags_take_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# lens\nlens.R = 2\nlens.k4 = 0.2\nprofile.samples = 3\n").unwrap();
    let out = bin()
        .args(["profile", "--R", "3", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["R"], 3.0);
    assert_eq!(summary["k4"], 0.2);
    assert_eq!(summary["samples"], 3);
}

#[test]
fn busy_directory_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join(".pillar-lens.lock"), "1").unwrap();
    assert_eq!(run(&["profile"], dir.path()), 1);
    assert!(!dir.path().join("profile.csv").exists());
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let out = bin().arg("profile").env("PILLAR_LENS_OUT", &target).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(target.join("profile.csv").exists());
}
