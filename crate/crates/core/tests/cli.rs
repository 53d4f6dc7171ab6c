use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, sub: &str, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("run.cfg");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_squeeze-phase"))
        .arg(sub)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn orbit_writes_table_and_summary() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), "orbit", "epsilon=0.1\nomega=1.0\n[orbit]\nsamples=64\n", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read_json(&dir.path().join("out/orbit_summary.json"));
    let g0 = summary["G0"].as_f64().unwrap();
    assert!((g0 - 0.46667).abs() <= 3.0 * 0.01);
    assert!(summary["residual"].as_f64().unwrap() <= 1e-10);
    let csv = fs::read_to_string(dir.path().join("out/orbit.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,G,Pi"));
    assert_eq!(lines.count(), 64);
}

#[test]
fn undriven_hannay_angles_vanish() {
    let dir = TempDir::new().unwrap();
    let cfg = "epsilon=0\n[hannay]\nn_t=64\nn_phi=64\nensemble=64\n";
    let out = run(dir.path(), "hannay", cfg, &[]);
    assert_eq!(out.status.code(), Some(0));
    let r = read_json(&dir.path().join("out/hannay.json"));
    for key in ["theta_closed", "theta_quadrature", "theta_quadrature_full", "theta_traj"] {
        assert!(r[key].as_f64().unwrap().abs() < 1e-9, "{key} = {}", r[key]);
    }
}

#[test]
fn floquet_reports_satisfy_relation() {
    let dir = TempDir::new().unwrap();
    let cfg = "epsilon=0.05\nomega=1\n[floquet]\nn=0,1,2,3\nensemble=128\n";
    let out = run(dir.path(), "floquet", cfg, &[]);
    assert_eq!(out.status.code(), Some(0));
    let reports = read_json(&dir.path().join("out/floquet.json"));
    let reports = reports.as_array().unwrap();
    assert_eq!(reports.len(), 4);
    for (n, r) in reports.iter().enumerate() {
        assert_eq!(r["n"].as_u64(), Some(n as u64));
        assert!(r["residual_45"].as_f64().unwrap().abs() <= 6.25e-4);
        let keys: Vec<&String> = r.as_object().unwrap().keys().collect();
        assert_eq!(
            keys,
            [
                "n",
                "I_bar0",
                "hbar",
                "rho",
                "lambda_G_R",
                "lambda_D_R",
                "theta_H",
                "residual_45",
                "residual_total"
            ]
        );
    }
}

#[test]
fn simulate_trajectory_columns() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), "simulate", "epsilon=0.1\n[simulate]\nsamples=20\n", &[]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,q,p,G,Pi,lambda_G,lambda_D,I,J,H_eff");
    assert_eq!(lines.len(), 22);
    assert!(lines[1].starts_with("0.0000000000000000e0,1.0000000000000000e0,"));
    assert!(!csv.contains('\r'));
}

#[test]
fn format_flag_overrides_defaults() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), "simulate", "[simulate]\nsamples=4\n", &["--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = read_json(&dir.path().join("out/trajectory.json"));
    assert_eq!(rows.as_array().unwrap().len(), 5);
    let out = run(dir.path(), "floquet", "[floquet]\nensemble=16\n", &["--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("out/floquet.csv")).unwrap();
    assert!(csv.starts_with("n,I_bar0,hbar,rho,"));
}

#[test]
fn sweep_is_deterministic() {
    let cfg = "[sweep]\nepsilon=0.02,0.05\nomega=1,2\nensemble=64\n";
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    assert_eq!(run(a.path(), "sweep", cfg, &[]).status.code(), Some(0));
    assert_eq!(run(b.path(), "sweep", cfg, &[]).status.code(), Some(0));
    let x = fs::read(a.path().join("out/sweep.csv")).unwrap();
    let y = fs::read(b.path().join("out/sweep.csv")).unwrap();
    assert_eq!(x, y);
    let text = String::from_utf8(x).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "eps,omega,theta_closed,theta_traj,rho,lambda_G_R_n0,residual_45_n0");
    assert_eq!(lines.len(), 5);
    // grid order: epsilon outer, omega inner
    assert!(lines[2].starts_with("2.0000000000000000e-2,2.0000000000000000e0,"));
    assert!(lines[3].starts_with("5.0000000000000003e-2,1.0000000000000000e0,"));
}

#[test]
fn floquet_output_is_deterministic() {
    let cfg = "epsilon=0.1\nhbar=2.0\n[floquet]\nn=0,1,2\nensemble=32\n";
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    run(a.path(), "floquet", cfg, &[]);
    run(b.path(), "floquet", cfg, &[]);
    assert_eq!(
        fs::read(a.path().join("out/floquet.json")).unwrap(),
        fs::read(b.path().join("out/floquet.json")).unwrap()
    );
}

#[test]
fn config_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), "orbit", "epsilon=1.5\n", &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 1: epsilon must be < 1"), "{err}");
    assert!(!dir.path().join("out").exists());

    let out = run(dir.path(), "orbit", "omega=x\nfoo=1\n", &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 1:") && err.contains("line 2:"), "{err}");

    let missing = Command::new(env!("CARGO_BIN_EXE_squeeze-phase"))
        .args(["check", "--config", "/nonexistent/run.cfg"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn numeric_failures_exit_with_one() {
    let dir = TempDir::new().unwrap();
    // a = 1 + 0.3 cos 2t, b = 1: principal Mathieu resonance, hyperbolic monodromy
    let cfg = "family=fourier\n[fourier]\nperiod=3.141592653589793\na_cos=1,0.3\n";
    let out = run(dir.path(), "hannay", cfg, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not elliptic"));

    let out = run(dir.path(), "simulate", "[integrator]\nmax_steps=3\n", &[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn check_passes() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), "check", "", &[]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.lines().filter(|l| l.starts_with("PASS")).count() > 40);
    assert!(!stdout.contains("FAIL"));
}
