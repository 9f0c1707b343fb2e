use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn write_model(dir: &TempDir, name: &str, doc: Value) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, doc.to_string()).unwrap();
    path
}

fn run(args: &[&str], config: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sizebias"));
    cmd.args(args);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.output().unwrap()
}

fn er(dir: &TempDir) -> PathBuf {
    write_model(
        dir,
        "er.json",
        json!({"variant": "er_graph", "vertices": 7, "edge_probability": 0.3, "thresholds": 2}),
    )
}

#[test]
fn validation_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let cfg = er(&dir);
    assert_eq!(run(&["bounds"], None).status.code(), Some(2));
    assert_eq!(run(&["bounds", "--t-grid", "1:2"], Some(&cfg)).status.code(), Some(2));
    assert_eq!(run(&["verify"], Some(&cfg)).status.code(), Some(2), "seed is required");
    assert_eq!(run(&["compare", "--bound-a", "chernoff"], Some(&cfg)).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"], None).status.code(), Some(2));
    let bad = write_model(&dir, "bad.json", json!({"variant": "er_graph", "vertices": 7, "thresholds": 2}));
    let out = run(&["bounds"], Some(&bad));
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    let missing = dir.path().join("nope.json");
    assert_eq!(run(&["bounds"], Some(&missing)).status.code(), Some(2));
}

#[test]
fn failed_verification_exits_one() {
    let dir = TempDir::new().unwrap();
    let cfg = write_model(&dir, "m.json", json!({"variant": "multinomial", "urns": 5, "balls": 7, "thresholds": 1}));
    let out = run(&["verify", "--seed", "3", "--samples", "20", "--statistic", "ge"], Some(&cfg));
    assert_eq!(out.status.code(), Some(1));
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("model,statistic,bound,t,bound_value,empirical,halfwidth,pass\n"));
}

#[test]
fn empty_grid_gives_header_only() {
    let dir = TempDir::new().unwrap();
    let cfg = er(&dir);
    let out = dir.path().join("b.csv");
    let status = run(&["bounds", "--t-grid", "", "--out", out.to_str().unwrap()], Some(&cfg)).status;
    assert!(status.success());
    assert_eq!(std::fs::read_to_string(out).unwrap(), "model,statistic,mean,mu,c,t,bound,side,value\n");
}

#[test]
fn bounds_use_the_model_mean() {
    let dir = TempDir::new().unwrap();
    let cfg = er(&dir);
    let out = run(&["bounds", "--statistic", "ge", "--t-grid", "1,2"], Some(&cfg));
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    // P(Bin(6, 0.3) >= 2)
    let q = 1.0 - 0.7f64.powi(6) - 6.0 * 0.3 * 0.7f64.powi(5);
    let want = 7.0 * q;
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert!(!rows.is_empty());
    for r in &rows {
        let mean: f64 = r[2].parse().unwrap();
        let mu: f64 = r[3].parse().unwrap();
        assert!((mean - want).abs() < 1e-12);
        assert_eq!(mu, mean);
        assert_eq!(r[4].parse::<f64>().unwrap(), 3.0);
    }
    assert!(rows.iter().any(|r| r[6] == "gauss_left" && r[7] == "left"));
    assert!(rows.iter().any(|r| r[6] == "sub_poisson_right" && r[7] == "right"));
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let dir = TempDir::new().unwrap();
    let cfg = write_model(
        &dir,
        "h.json",
        json!({"variant": "hypergeometric", "colors": [3, 4, 2], "sample_size": 4, "thresholds": 1, "seed": 5}),
    );
    let a = run(&["simulate", "--samples", "9000", "--pairs", "--jobs", "1"], Some(&cfg));
    let b = run(&["simulate", "--samples", "9000", "--pairs", "--jobs", "4"], Some(&cfg));
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["simulate", "--samples", "9000", "--pairs", "--seed", "6"], Some(&cfg));
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn json_outputs_parse() {
    let dir = TempDir::new().unwrap();
    let cfg = er(&dir);
    let out = run(&["bounds", "--format", "json", "--t-grid", "0:4:2"], Some(&cfg));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["model"], "er_graph");
    assert_eq!(doc["entries"].as_array().unwrap().len(), 2);

    let out = run(&["simulate", "--format", "json", "--samples", "10", "--seed", "1", "--statistic", "ne"], Some(&cfg));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["entries"][0]["values"].as_array().unwrap().len(), 10);

    let out = run(
        &["compare", "--format", "json", "--mu", "10", "--c", "1", "--mcdiarmid-sum-sq", "100", "--t-grid", "1:90:1"],
        None,
    );
    assert!(out.status.success());
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let cross = doc["entries"][0]["crossovers"].as_array().unwrap();
    assert_eq!(cross.len(), 1);
    assert!((cross[0].as_f64().unwrap() - 45.0).abs() < 0.5);
}
