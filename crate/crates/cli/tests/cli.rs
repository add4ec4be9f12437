use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_resfock")).args(args).env_remove("RESFOCK_OUT_DIR").output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn complex(v: &Value) -> (f64, f64) {
    (v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

#[test]
fn holonomy_half_turn() {
    let out = run(&["holonomy", "--delta", "0.5", "--nodes", "512"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let (re, im) = complex(&v["phase"]);
    assert!((re + 1.0).abs() < 1e-6 && im.abs() < 1e-6);
    let (tr, ti) = complex(&v["target"]);
    assert!((tr + 1.0).abs() < 1e-15 && ti.abs() < 1e-15);
    assert!(v["err"].as_f64().unwrap() < 1e-6);
}

#[test]
fn ss_check_on_swap() {
    let out = run(&["ss-check", "--op", &data("swap.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["hs_pm"].as_f64(), Some(1.0));
    assert_eq!(v["hs_mp"].as_f64(), Some(1.0));
    assert!(v["identity_resid"].as_f64().unwrap() < 1e-12);
}

#[test]
fn missing_file_is_an_input_error() {
    let out = run(&["ss-check", "--op", "/definitely/not/here.json"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["error"]["kind"], "input");
    assert!(v["error"]["message"].as_str().unwrap().contains("here.json"));
}

#[test]
fn malformed_operator_and_bad_arguments_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"neg": 1, "pos": 1, "re": [[1, 0]], "extra": 3}"#).unwrap();
    let out = run(&["implement", "--op", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["error"]["kind"], "input");
    assert_eq!(run(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(&["cocycle", "--op", &data("x.json")]).status.code(), Some(1));
    assert_eq!(run(&["holonomy", "--delta", "2"]).status.code(), Some(1));
}

#[test]
fn tolerance_breach_exits_two() {
    let out = run(&["holonomy", "--delta", "0.3", "--tol", "1e-14"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["violations"].as_array().unwrap().len(), 1);
}

#[test]
fn implement_reports_vacuum() {
    let out = run(&["implement", "--op", &data("rotation.json")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["intertwining"].as_f64().unwrap() < 1e-10);
    let vac = v["vacuum"].as_array().unwrap();
    let norm: f64 = vac.iter().map(|e| e["re"].as_f64().unwrap().powi(2) + e["im"].as_f64().unwrap().powi(2)).sum();
    assert!((norm - 1.0).abs() < 1e-12);
}

#[test]
fn cocycle_transport_and_loopgroup_files() {
    let c = json(&run(&["cocycle", "--op", &data("x.json"), "--op", &data("y.json")]));
    assert!(c["fd_error"].as_f64().unwrap() < 1e-8);
    assert!(c["anomaly_vs_trace"].as_f64().unwrap() < 1e-12);
    let t = run(&["transport", "--path", &data("path.json")]);
    assert_eq!(t.status.code(), Some(0));
    let l = json(&run(&["loopgroup", "--fourier", &data("h.json"), "--fourier", &data("g.json")]));
    let (re, im) = complex(&l["cocycle"]);
    assert!(re.abs() < 1e-15 && (im + 0.5).abs() < 1e-15);
    assert_eq!(l["interior_commutator"].as_f64(), Some(0.0));
}

#[test]
fn selftests_pass_and_are_reproducible() {
    for cmd in ["ss-check", "cocycle", "implement", "transport", "holonomy", "loopgroup", "dirac1d", "pipeline"] {
        let a = run(&[cmd, "--selftest", "--cases", "2", "--seed", "7"]);
        assert_eq!(a.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&a.stdout));
        let v = json(&a);
        assert_eq!(v["pass"], true);
        assert_eq!(v["meta"]["seed"], 7);
        let b = run(&[cmd, "--selftest", "--cases", "2", "--seed", "7"]);
        assert_eq!(a.stdout, b.stdout, "{cmd} output differs between identical runs");
    }
}

#[test]
fn scans_merge_deterministically_across_jobs() {
    let cfg = data("pulse.toml");
    let one = run(&["dirac1d", "--config", &cfg, "--cutoffs", "2,3,4", "--jobs", "1"]);
    let three = run(&["dirac1d", "--config", &cfg, "--cutoffs", "4,2,3", "--jobs", "3"]);
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, three.stdout);
    let rows = json(&one)["table"].as_array().unwrap().clone();
    let keys: Vec<u64> = rows.iter().map(|r| r["cutoff"].as_u64().unwrap()).collect();
    assert_eq!(keys, [2, 3, 4]);
}

#[test]
fn csv_flattens_scan_table() {
    let out = run(&["dirac1d", "--config", &data("pulse.toml"), "--cutoffs", "2,3", "--t1", "0.6", "--csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "cutoff,q_hs,raw_hs,renormalized_hs,unitarity_defect");
    assert_eq!(lines.len(), 3);
    assert_eq!(run(&["holonomy", "--csv"]).status.code(), Some(1));
}

#[test]
fn pipeline_runs_on_config() {
    let out = run(&["pipeline", "--config", &data("pulse.toml"), "--nodes", "128"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let p = v["fock"]["vacuum_persistence"].as_f64().unwrap();
    assert!(p > 0.5 && p <= 1.0 + 1e-12);
    assert!(v["s_unitarity"].as_f64().unwrap() < 1e-8);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_resfock"))
        .args(["ss-check", "--op", &data("swap.json")])
        .env("RESFOCK_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let saved = std::fs::read(dir.path().join("ss-check.json")).unwrap();
    assert_eq!(saved, out.stdout);
}
