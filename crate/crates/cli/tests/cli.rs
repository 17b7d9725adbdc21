use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn infometer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infometer"))
        .args(args)
        .env_remove("INFOMETER_WORKERS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn simulate(dir: &Path, system: &str, file: &str, extra: &[&str]) -> String {
    let path = dir.join(file).to_string_lossy().into_owned();
    let mut args = vec!["simulate", system, "--seed", "7", "--output", &path];
    args.extend_from_slice(extra);
    let out = infometer(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

const FAST: [&str; 4] = ["--surrogates", "100", "--bootstrap", "100"];

#[test]
fn exit_codes() {
    assert_eq!(infometer(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(infometer(&["entropy"]).status.code(), Some(64));
    assert_eq!(infometer(&["--help"]).status.code(), Some(0));
    assert_eq!(infometer(&["--version"]).status.code(), Some(0));

    let disjoint = infometer(&["kl", "--p", "0.5,0.5", "--q", "1,0"]);
    assert_eq!(disjoint.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&disjoint.stderr).contains("Jensen-Shannon"));

    let missing = infometer(&["entropy", "--input", "/nonexistent.csv", "--column", "x", "--seed", "1"]);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(infometer(&["ei", "--tpm", "/nonexistent.json", "--workers", "0"]).status.code(), Some(2));
}

#[test]
fn every_number_carries_a_complete_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "uniform-symbols", "u.csv", &["--n", "2000"]);
    let v = json(&infometer(&["entropy", "--input", &data, "--column", "x", "--seed", "3", "--bootstrap", "100"]));
    assert_eq!(v["seed"], 3);
    for entry in v["results"].as_array().unwrap() {
        let m = &entry["manifest"];
        for field in ["role", "estimator", "uncertainty", "significance", "preprocessing"] {
            assert!(!m[field].is_null(), "manifest lacks {field}");
        }
        assert_eq!(m["role"], "measurement");
        assert_eq!(m["uncertainty"]["kind"], "interval");
    }
}

#[test]
fn kl_direction_and_smoothing_are_recorded() {
    let v = json(&infometer(&["kl", "--p", "0.5,0.5", "--q", "1,0", "--additive", "0.01"]));
    let hp = &v["results"][0]["manifest"]["estimator"]["hyperparams"];
    assert_eq!(hp["kind"]["direction"], "forward");
    assert!(hp["kind"]["smoothing"].to_string().contains("0.01"));
    let js = json(&infometer(&["kl", "--p", "0.5,0.5", "--q", "1,0", "--measure", "js"]));
    assert!((js["results"][0]["value"].as_f64().unwrap() - 0.2157615543388357).abs() < 1e-12);
}

#[test]
fn missing_seed_is_generated_and_printed() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "uniform-symbols", "u.csv", &["--n", "500"]);
    let out = infometer(&["entropy", "--input", &data, "--column", "x", "--bootstrap", "100"]);
    let stderr = String::from_utf8_lossy(&out.stderr).into_owned();
    let printed: u64 = stderr.trim().strip_prefix("seed: ").expect("seed line").parse().unwrap();
    assert_eq!(json(&out)["seed"], printed);
}

#[test]
fn worker_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "coupled-ar", "ar.csv", &["--n", "600"]);
    let run = |workers: &str| {
        let mut args = vec!["te", "--input", &data, "--source", "source", "--target", "target", "--seed", "11"];
        args.extend_from_slice(&FAST);
        args.extend_from_slice(&["--workers", workers]);
        infometer(&args).stdout
    };
    let one = run("1");
    assert!(!one.is_empty());
    assert_eq!(one, run("3"));

    // Plugin counts summed in hash order used to differ between processes.
    let reactive = simulate(dir.path(), "reactive-tpm", "r.json", &[]);
    let rec = simulate(dir.path(), "tpm-trials", "r.csv", &["--tpm", &reactive, "--trials", "10", "--n", "100"]);
    let run = |workers: &str| {
        let mut args = vec!["autonomy", "--input", &rec, "--v-cols", "n0", "--e-cols", "n1", "--seed", "3"];
        args.extend_from_slice(&FAST);
        args.extend_from_slice(&["--workers", workers]);
        infometer(&args).stdout
    };
    let one = run("1");
    assert!(!one.is_empty());
    assert_eq!(one, run("2"));
    assert_eq!(one, run("1"));
}

#[test]
fn bits_view_keeps_nats() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), "uniform-symbols", "u.csv", &["--n", "1000", "--alphabet", "2"]);
    let v = json(&infometer(&[
        "entropy",
        "--input",
        &data,
        "--column",
        "x",
        "--seed",
        "1",
        "--bootstrap",
        "100",
        "--bits",
    ]));
    let e = &v["results"][0];
    assert_eq!(e["unit"], "nats");
    let nats = e["value"].as_f64().unwrap();
    assert!((e["bits"]["value"].as_f64().unwrap() - nats / std::f64::consts::LN_2).abs() < 1e-12);
}

#[test]
fn binary_systems_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let micro = simulate(dir.path(), "degenerate-tpm", "d.json", &[]);
    let v = json(&infometer(&["emergence", "--tpm", &micro, "--groups", "0,1,2;3"]));
    assert_eq!(v["results"][0]["result"]["emergent"], true);
    assert_eq!(v["results"][0]["manifest"]["uncertainty"]["kind"], "exact");

    let reactive = simulate(dir.path(), "reactive-tpm", "r.json", &[]);
    let rec = simulate(dir.path(), "tpm-trials", "r.csv", &["--tpm", &reactive, "--trials", "20", "--n", "100"]);
    let mut args = vec![
        "autonomy",
        "--tpm",
        &reactive,
        "--v-nodes",
        "0",
        "--input",
        &rec,
        "--v-cols",
        "n0",
        "--e-cols",
        "n1",
        "--trial-column",
        "trial",
        "--seed",
        "2",
    ];
    args.extend_from_slice(&FAST);
    let v = json(&infometer(&args));
    let by_label =
        |l: &str| v["results"].as_array().unwrap().iter().find(|e| e["label"] == l).unwrap()["value"].as_f64().unwrap();
    assert!(by_label("autonomy_causal") < 1e-9);
    assert!(by_label("autonomy_observational") > 0.3);
}

#[test]
fn csv_summary_has_one_row_per_result() {
    let out = infometer(&["kl", "--p", "0.2,0.8", "--q", "0.5,0.5", "--format", "csv-summary"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("label,unit,value"));
    assert!(lines[1].ends_with("kl_plugin"));
}

#[test]
fn advise_reports_the_caveat() {
    let v = json(&infometer(&["advise", "--objective", "directed-influence", "--streams", "5", "--continuous"]));
    assert_eq!(v["recommendation"]["estimator"], "network_scan");
    assert!(v["recommendation"]["caveat"].as_str().unwrap().contains("spurious"));
}
