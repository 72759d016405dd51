use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mapsel_core::diagnostics::SparseSpectrum;
use mapsel_core::risk::RiskReport;
use mapsel_core::ssvs::ChainSummary;
use mapsel_core::SelectionResult;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::Value;
use tempfile::TempDir;

fn mapsel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mapsel"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, body).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

/// `n x p` Gaussian design with `y` built from a planted 2-sparse vector.
fn planted_csv(n: usize, p: usize, seed: u64, magnitude: f64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<String> = (1..=p).map(|j| format!("x{j}")).collect();
    out.push("y".into());
    let mut text = out.join(",") + "\n";
    for _ in 0..n {
        let row: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
        let noise: f64 = rng.sample(StandardNormal);
        let y = magnitude * row[1] - magnitude * row[4.min(p - 1)] + noise;
        let mut cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        cells.push(y.to_string());
        text += &(cells.join(",") + "\n");
    }
    text
}

#[test]
fn toy_select_finds_exact_predictor() {
    let dir = TempDir::new().unwrap();
    let csv = write(&dir, "toy.csv", "x1,x2,y\n1,0,1\n0,1,0\n1,1,1\n");
    let out = mapsel(&[
        "select",
        "--input",
        s(&csv),
        "--prior",
        r#"{"kind":"geometric","q":0.5}"#,
        "--sigma-sq",
        "0.01",
        "--no-intercept",
        "--no-meta",
    ]);
    let v = json(&out);
    assert_eq!(v["selected"], serde_json::json!(["x1"]));
    assert!(v["rss"].as_f64().unwrap() < 1e-12);
    let sel: SelectionResult = serde_json::from_value(v["selection"].clone()).unwrap();
    assert_eq!(sel.model.indices(), &[0]);
}

#[test]
fn response_only_gives_intercept_model() {
    let dir = TempDir::new().unwrap();
    let csv = write(&dir, "y.csv", "y\n1\n2\n4\n");
    let v = json(&mapsel(&["select", "--input", s(&csv), "--sigma-sq", "1", "--no-meta"]));
    assert_eq!(v["selected"], serde_json::json!([]));
    assert!((v["intercept"].as_f64().unwrap() - 7.0 / 3.0).abs() < 1e-12);
}

#[test]
fn malformed_csv_reports_line() {
    let dir = TempDir::new().unwrap();
    let csv = write(&dir, "bad.csv", "x1,y\n1,2\n3,oops\n");
    let out = mapsel(&["select", "--input", s(&csv), "--sigma-sq", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let ragged = write(&dir, "ragged.csv", "x1,y\n1,2\n3\n");
    let out = mapsel(&["select", "--input", s(&ragged), "--sigma-sq", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn noise_variance_is_required() {
    let dir = TempDir::new().unwrap();
    let csv = write(&dir, "d.csv", &planted_csv(20, 4, 1, 2.0));
    let out = mapsel(&["select", "--input", s(&csv)]);
    assert_eq!(out.status.code(), Some(2));
    let out = mapsel(&["select", "--input", s(&csv), "--estimate-sigma", "--no-meta"]);
    let v = json(&out);
    assert_eq!(v["sigma_sq_estimated"], Value::Bool(true));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn budget_exceeded_exits_3() {
    let dir = TempDir::new().unwrap();
    let csv = write(&dir, "d.csv", &planted_csv(30, 12, 2, 2.0));
    let out = mapsel(&["select", "--input", s(&csv), "--sigma-sq", "1", "--budget", "100"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ssvs"));
}

#[test]
fn invalid_prior_is_a_domain_error() {
    let dir = TempDir::new().unwrap();
    let csv = write(&dir, "d.csv", &planted_csv(10, 3, 3, 2.0));
    let out = mapsel(&["select", "--input", s(&csv), "--sigma-sq", "1", "--prior", r#"{"kind":"binomial","xi":1.5}"#]);
    assert_eq!(out.status.code(), Some(1));
    let out = mapsel(&["select", "--input", s(&csv), "--sigma-sq", "1", "--prior", "{not json"]);
    assert_eq!(out.status.code(), Some(2));
}

fn penalty_rows(args: &[&str]) -> Vec<Vec<f64>> {
    let out = mapsel(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,prior,L,pen"));
    lines
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

#[test]
fn penalty_table() {
    let rows = penalty_rows(&["penalty", "--p", "4", "--prior", r#"{"kind":"geometric","q":0.5}"#, "--gamma", "3"]);
    assert_eq!(rows.len(), 5);
    assert!((rows[2][3] - 13.935).abs() < 1e-3);
    let ks: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    assert_eq!(ks, vec![0.0, 1.0, 2.0, 3.0, 4.0]);

    let rows = penalty_rows(&["penalty", "--p", "9", "--prior", r#"{"kind":"binomial","xi":0.2}"#, "--gamma", "5"]);
    let d: Vec<f64> = rows.windows(2).map(|w| w[1][3] - w[0][3]).collect();
    for w in d.windows(2).take(d.len() - 2) {
        assert!((w[1] - w[0]).abs() < 1e-9);
    }

    let rows = penalty_rows(&["penalty", "--p", "6", "--rank", "3"]);
    assert_eq!(rows.len(), 4);
}

#[test]
fn diagnose_orthonormal_design() {
    let dir = TempDir::new().unwrap();
    let mut text = String::from("a,b,c,d\n");
    for i in 0..5 {
        let row: Vec<&str> = (0..4).map(|j| if i == j { "1" } else { "0" }).collect();
        text += &(row.join(",") + "\n");
    }
    let csv = write(&dir, "ortho.csv", &text);
    let v = json(&mapsel(&["diagnose", "--input", s(&csv), "--no-intercept", "--no-meta"]));
    let curve: Vec<SparseSpectrum> = serde_json::from_value(v["tau_curve"].clone()).unwrap();
    assert_eq!(curve.len(), 4);
    assert!(curve.iter().all(|s| s.tau == 1.0));
    assert_eq!(v["classification"]["label"], "nearly-orthogonal");
}

fn scenario_json() -> &'static str {
    r#"{"name":"cli","n":15,"p":15,"design":{"kind":"orthonormal"},"p0":2,
        "beta_magnitude":5.0,"sigma_sq":1.0,"replications":50,"seed":8,
        "estimators":[
          {"name":"geo","rule":"map","prior":{"kind":"geometric","q":0.5}},
          {"name":"ric","rule":"map_calibrated","criterion":{"name":"ric"}}]}"#
}

#[test]
fn simulate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "scenario.json", scenario_json());
    let run = |tag: &str| {
        let json_path = dir.path().join(format!("{tag}.json"));
        let csv_path = dir.path().join(format!("{tag}.csv"));
        let out = mapsel(&[
            "simulate",
            "--config",
            s(&cfg),
            "--output",
            s(&json_path),
            "--csv",
            s(&csv_path),
            "--no-meta",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (fs::read(&json_path).unwrap(), fs::read(&csv_path).unwrap())
    };
    let a = run("a");
    let b = run("b");
    assert_eq!(a, b);
    let report: RiskReport = serde_json::from_slice(&a.0).unwrap();
    assert_eq!(report.estimators.len(), 2);
    assert_eq!(String::from_utf8(a.1).unwrap().lines().count(), 3);
}

#[test]
fn meta_envelope() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "scenario.json", scenario_json());
    let v = json(&mapsel(&["simulate", "--config", s(&cfg)]));
    assert_eq!(v["meta"]["command"], "simulate");
    let _: RiskReport = serde_json::from_value(v["result"].clone()).unwrap();
}

#[test]
fn ssvs_agrees_with_select_on_planted_instance() {
    let dir = TempDir::new().unwrap();
    let csv = write(&dir, "planted.csv", &planted_csv(30, 10, 5, 5.0));
    let sel = json(&mapsel(&["select", "--input", s(&csv), "--sigma-sq", "1", "--no-meta"]));
    let top = dir.path().join("top.csv");
    let out = mapsel(&[
        "ssvs",
        "--input",
        s(&csv),
        "--sigma-sq",
        "1",
        "--sweeps",
        "3000",
        "--burn-in",
        "300",
        "--chains",
        "2",
        "--seed",
        "4",
        "--csv",
        s(&top),
        "--no-meta",
    ]);
    let v = json(&out);
    assert_eq!(v["best"]["selected"], sel["selected"]);
    assert_eq!(sel["selected"], serde_json::json!(["x2", "x5"]));
    let summary: ChainSummary = serde_json::from_value(v["summary"].clone()).unwrap();
    assert_eq!(summary.accepted_sweeps, 2 * 2700);
    assert!(fs::read_to_string(&top).unwrap().starts_with("rank,model"));
}
