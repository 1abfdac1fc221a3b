use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_shilnikov-forge");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("SHILNIKOV_FORGE_OUT")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn usage_and_exit_codes() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["eigs", "--bogus"]).status.code(), Some(1));
    assert_eq!(run(&["eigs", "--param", "zeta=1"]).status.code(), Some(1));
    assert_eq!(run(&["eigs", "--preset", "gamma"]).status.code(), Some(1));
}

#[test]
fn eigs_report_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["eigs", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&dir.path().join("report.json"));
    assert!((r["rho"].as_f64().unwrap() - 0.790204).abs() < 1e-5);
    assert!((r["omega"].as_f64().unwrap() - 8.482321).abs() < 1e-5);
    assert!((r["lambda"].as_f64().unwrap() + 1.576071).abs() < 1e-5);
    assert_eq!(r["shilnikov"], Value::Bool(true));
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["status"], "ok");
    assert_eq!(m["config"]["preset"], "beta");
    assert!(dir.path().join("eigs.csv").exists());
}

#[test]
fn parameter_overrides_are_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["eigs", "--out", out, "--param", "eps=0.02", "--tol-rel", "1e-9"]);
    assert_eq!(o.status.code(), Some(0));
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["config"]["params"]["eps"].as_f64(), Some(0.02));
    assert_eq!(m["config"]["tol_manifold"]["rel"].as_f64(), Some(1e-9));
}

#[test]
fn shoot_at_alpha_tilde() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["shoot", "--preset", "alpha-tilde", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    let r = json(&dir.path().join("report.json"));
    assert!(r["psi_norm"].as_f64().unwrap() <= 2e-6);
}

#[test]
fn env_var_overrides_out() {
    let flag = tempfile::tempdir().unwrap();
    let env = tempfile::tempdir().unwrap();
    let o = Command::new(BIN)
        .args(["eigs", "--out", flag.path().to_str().unwrap()])
        .env("SHILNIKOV_FORGE_OUT", env.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(env.path().join("manifest.json").exists());
    assert!(!flag.path().join("manifest.json").exists());
}

#[test]
fn json_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["eigs", "--format", "json", "--out", out]);
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("eigs.json").exists());
}

#[test]
fn results_do_not_depend_on_workers() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (d, w) in [(&a, "1"), (&b, "3")] {
        let o = run(&["return-map", "--samples", "60", "--no-jacobian", "--workers", w, "--out", d.path().to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["return_map.csv", "fixed_points.json"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs");
    }
}

#[test]
fn numerical_failure_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["koper-cross", "--preset", "alpha-tilde", "--theta", "0", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    let m = json(&dir.path().join("manifest.json"));
    assert_eq!(m["status"], "numerical-failure");
    assert!(m["error"].is_string());
}
