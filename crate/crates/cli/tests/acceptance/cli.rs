use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn pipgd(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pipgd"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn pipgd")
}

fn summary(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("summary JSON on stdout")
}

fn check(summary: &Value, name: &str) -> bool {
    summary["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("missing check {name}"))["pass"]
        .as_bool()
        .unwrap()
}

#[test]
fn certify_passes_with_appendix_lemma() {
    let dir = TempDir::new().unwrap();
    let out = pipgd(&["certify", "--appendix-lemma", "--samples", "500"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(&out);
    assert!(check(&s, "appendix_lemma"));
    assert!(check(&s, "weak_contraction_spot_check"));
    assert!(s["certificate"]["certified"].as_bool().unwrap());
    assert!(dir.path().join("certificate.json").exists());
}

#[test]
fn oversized_gamma_fails_certification() {
    let dir = TempDir::new().unwrap();
    let out = pipgd(&["certify", "--gamma", "10/L"], dir.path());
    assert_ne!(out.status.code(), Some(0));
    let s = summary(&out);
    assert!(!check(&s, "gain_certificate"));
    assert!(!s["certificate"]["gamma_ok"].as_bool().unwrap());
}

#[test]
fn summary_schema() {
    let dir = TempDir::new().unwrap();
    let out = pipgd(&["lasso", "--t-end", "2"], dir.path());
    assert!(matches!(out.status.code(), Some(0) | Some(1)));
    let s = summary(&out);
    let on_disk: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(s, on_disk);
    assert_eq!(s["config"]["command"], "lasso");
    assert!(s["config"]["build"].as_str().unwrap().starts_with(env!("CARGO_PKG_VERSION")));
    assert_eq!(s["config"]["resolved"]["params"]["t_end"], 2.0);
    for key in ["certificate", "oracle", "terminal", "envelope", "checks"] {
        assert!(!s[key].is_null(), "missing {key}");
    }
    let header = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let header = header.lines().next().unwrap();
    assert!(header.starts_with("t,x_0,"));
    assert!(header.ends_with("h_residual,field_norm_P,dist_P"));
    assert!(dir.path().join("instance.json").exists());
}

#[test]
fn runs_are_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let args = ["lasso", "--seed", "3", "--trials", "4", "--t-end", "3"];
    pipgd(&args, a.path());
    pipgd(&args, b.path());
    for file in ["trace.csv", "trials.csv", "instance.json"] {
        let fa = fs::read(a.path().join(file)).unwrap();
        let fb = fs::read(b.path().join(file)).unwrap();
        assert!(fa == fb, "{file} differs between runs");
    }
}

#[test]
fn gain_sweep_writes_six_curves() {
    let dir = TempDir::new().unwrap();
    let out = pipgd(&["nonlinear", "--gain-sweep"], dir.path());
    assert!(matches!(out.status.code(), Some(0) | Some(1)));
    let sweeps = fs::read_dir(dir.path())
        .unwrap()
        .filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().starts_with("sweep_kp"))
        .count();
    assert_eq!(sweeps, 6);
    assert!(check(&summary(&out), "gain_sweep_monotone_tails"));
}

#[test]
fn ot_reports_sinkhorn_status() {
    let dir = TempDir::new().unwrap();
    let out = pipgd(&["ot", "--eps", "0.1", "--t-end", "200"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(&out);
    assert_eq!(s["sinkhorn"]["status"], "converged");
    assert!(check(&s, "cost_agreement"));
    for file in ["plan_pipgd.csv", "plan_sinkhorn.csv", "residual.csv"] {
        assert!(dir.path().join(file).exists(), "{file}");
    }
}

#[test]
fn usage_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    assert_eq!(pipgd(&["lasso", "--n", "3", "--m", "5"], dir.path()).status.code(), Some(2));
    assert_eq!(pipgd(&["nonlinear", "--gamma", "2/L"], dir.path()).status.code(), Some(2));
    assert_eq!(pipgd(&["lasso", "--dt", "-1"], dir.path()).status.code(), Some(2));
    assert_eq!(pipgd(&["bogus"], dir.path()).status.code(), Some(2));
}

#[test]
fn out_dir_from_environment() {
    let dir = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_pipgd"))
        .args(["certify", "--samples", "10"])
        .env("PIPGD_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("certificate.json").exists());
}

#[test]
fn fixture_round_trip() {
    let dir = TempDir::new().unwrap();
    let first = pipgd(&["lasso", "--seed", "5", "--t-end", "1"], dir.path());
    let fixture = dir.path().join("instance.json");
    let again = TempDir::new().unwrap();
    let second = Command::new(env!("CARGO_BIN_EXE_pipgd"))
        .args(["lasso", "--t-end", "1", "--fixture"])
        .arg(&fixture)
        .arg("--out")
        .arg(again.path())
        .output()
        .unwrap();
    assert_eq!(first.status.code(), second.status.code());
    assert_eq!(
        fs::read(dir.path().join("trace.csv")).unwrap(),
        fs::read(again.path().join("trace.csv")).unwrap()
    );
}
