//! End-to-end runs of the binary.

use std::f64::consts::PI;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_record-moments"));
    c.env_remove("RECORD_MOMENTS_TOL");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn exponential_records_are_the_integers() {
    let v = json(&run(&["ers", "--dist", "exponential", "--n", "5"]));
    for (i, r) in floats(&v["rho"]).iter().enumerate() {
        assert!((r - (i + 1) as f64).abs() < 1e-9, "{r}");
    }
}

#[test]
fn parameterized_and_json_sources_agree() {
    let a = run(&["ers", "--dist", "uniform:0,2", "--n", "4"]);
    let b = run(&["ers", "--dist", r#"{"kind":"uniform","a":0,"b":2}"#, "--n", "4"]);
    assert_eq!(json(&a)["rho"], json(&b)["rho"]);
}

#[test]
fn csv_output_has_header_and_rows() {
    let out = run(&["--format", "csv", "ers", "--dist", "uniform", "--n", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,rho,error");
    assert_eq!(lines.len(), 4);
    let rho3: f64 = lines[3].split(',').nth(1).unwrap().parse().unwrap();
    assert!((rho3 - 0.875).abs() < 1e-12);
}

#[test]
fn constant_source_is_refused() {
    let out = run(&["ers", "--dist", "constant"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("non-constant required"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn bad_input_exits_with_one() {
    for args in [
        vec!["ers", "--dist", "{not json"],
        vec!["ers", "--dist", "exponential", "--n", "31"],
        vec!["ers", "--dist", "no_such_family"],
        vec!["--tol", "2", "ers", "--dist", "exponential"],
        vec!["frobnicate"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn failed_run_leaves_no_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.json");
    let p = path.to_str().unwrap();
    let out = run(&["--out", p, "ers", "--dist", "constant"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!path.exists());
    let out = run(&["--out", p, "ers", "--dist", "exponential", "--n", "3"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(floats(&v["rho"]).len(), 3);
}

#[test]
fn simulation_is_byte_identical_across_runs() {
    let args = ["--seed", "77", "--format", "csv", "simulate", "--dist", "gumbel", "--n", "3", "--reps", "500"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["--seed", "78", "--format", "csv", "simulate", "--dist", "gumbel", "--n", "3", "--reps", "500"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn tolerance_comes_from_the_environment() {
    let loose = bin()
        .args(["ers", "--dist", "lognormal", "--n", "3"])
        .env("RECORD_MOMENTS_TOL", "1e-3")
        .output()
        .unwrap();
    let tight = run(&["ers", "--dist", "lognormal", "--n", "3"]);
    let (l, t) = (json(&loose), json(&tight));
    assert!(floats(&l["error"])[0] > floats(&t["error"])[0]);
    let bad = bin().args(["ers", "--dist", "exponential"]).env("RECORD_MOMENTS_TOL", "abc").output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    // The flag overrides the environment.
    let flag = bin()
        .args(["--tol", "1e-10", "ers", "--dist", "exponential"])
        .env("RECORD_MOMENTS_TOL", "abc")
        .output()
        .unwrap();
    assert!(flag.status.success());
}

#[test]
fn point_mass_reconstruction_is_a_single_step() {
    let v = json(&run(&["transform", "inverse", "--t", r#"{"kind":"atoms","atoms":[[1,1]]}"#]));
    assert_eq!(v["c_t"].as_f64().unwrap(), 1.0);
    let ys = floats(&v["grid"]["y"]);
    let hs = floats(&v["grid"]["h0"]);
    let e = std::f64::consts::E;
    for (y, h) in ys.iter().zip(&hs) {
        let want = if *y <= 1.0 { -1.0 } else { e - 1.0 };
        assert!((h - want).abs() < 1e-14, "y = {y}: {h}");
    }
}

#[test]
fn exponential_source_maps_to_gamma_two() {
    let v = json(&run(&["transform", "phi", "--dist", "exponential"]));
    let ts = floats(&v["grid"]["t"]);
    let cs = floats(&v["grid"]["cdf"]);
    for (t, c) in ts.iter().zip(&cs) {
        let want = 1.0 - (1.0 + t) * (-t).exp();
        assert!((c - want).abs() < 1e-8, "t = {t}: {c} vs {want}");
    }
}

/// `H_0(y) - H_0(1) = \int_1^y e^t/t f(t) dt` for the oscillating lognormal
/// density at `lambda = 0`, by a trapezoid rule in `s = ln t`.
#[test]
fn lognormal_reconstruction_against_direct_integral() {
    let v = json(&run(&["transform", "inverse", "--t", r#"{"kind":"stieltjes_lambda","lambda":0}"#]));
    let ys = floats(&v["grid"]["y"]);
    let hs = floats(&v["grid"]["h0"]);
    let integral = |y: f64| {
        let n = 40_000;
        let b = y.ln();
        let g = |s: f64| s.exp().exp() * (-0.5 * s * s - s).exp() / (2.0 * PI).sqrt();
        let h = b / n as f64;
        (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                w * g(i as f64 * h)
            })
            .sum::<f64>()
            * h
    };
    let i1 = ys.iter().position(|y| (y - 1.0).abs() < 1e-9);
    let base = match i1 {
        Some(i) => hs[i],
        None => hs[0] - integral(ys[0]),
    };
    for (y, h) in ys.iter().zip(&hs) {
        let want = base + integral(*y);
        assert!((h - want).abs() < 1e-6 * want.abs().max(1.0), "y = {y}: {h} vs {want}");
    }
}

#[test]
fn moment_screening_flags_infeasible_input() {
    let ok = json(&run(&["moments", "--m", "[1,1,2,6,24,120]"]));
    assert_eq!(ok["feasible"], Value::Bool(true));
    let bad = json(&run(&["moments", "--m", "[1,2,1,1]"]));
    assert_eq!(bad["feasible"], Value::Bool(false));
}

#[test]
fn demo_writes_json_and_prints_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table1.json");
    let out = run(&["--out", path.to_str().unwrap(), "demo", "table1", "--reps", "2000"]);
    assert!(out.status.success());
    let report = String::from_utf8(out.stdout).unwrap();
    assert!(report.contains("Pr(W_2 = 0 | W_1 = 0)"), "{report}");
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(v.is_object());
}
