use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lptsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lptsp"))
        .args(args)
        .env_remove("LPTSP_WORK_CAP")
        .output()
        .expect("binary runs")
}

fn json_out(args: &[&str]) -> Value {
    let out = lptsp(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn generate(dir: &Path, seed: u64, n: usize, kind: &str) -> String {
    let path = dir.join(format!("{kind}-{seed}-{n}.json"));
    let p = path.to_str().unwrap();
    let out = lptsp(&["generate", "--seed", &seed.to_string(), "--n", &n.to_string(), "--kind", kind, "--output", p]);
    assert!(out.status.success());
    p.to_string()
}

#[test]
fn fig1_exact_orders() {
    let v = json_out(&["solve", "--algo", "exact", "--p", "2", "--instance", "fig1"]);
    assert_eq!(v["route"], serde_json::json!([0, 1, 2, 3]));
    let v = json_out(&["solve", "--algo", "exact", "--p", "1", "--instance", "fig1.json"]);
    assert_eq!(v["route"], serde_json::json!([0, 2, 3, 1]));
}

#[test]
fn appendix_min_max() {
    let v = json_out(&["verify", "allnorm", "--instance", "appendixA", "--pgrid", "1,1.5,2,3,4,inf"]);
    let mm = v["min_max"].as_f64().unwrap();
    assert!(mm >= 1.77, "{mm}");
    assert_eq!(v["candidates"].as_array().unwrap().len(), 149);
}

#[test]
fn appendix_csv() {
    let out = lptsp(&["verify", "allnorm", "--instance", "appendixA", "--pgrid", "1,inf", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("route_id,norm,ratio"));
    assert_eq!(lines.count(), 149 * 2);
}

#[test]
fn generated_cover_within_bound() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path(), 1, 8, "random_metric");
    let v = json_out(&["solve", "--algo", "cover", "--p", "2", "--instance", &inst, "--seed", "1", "--grid", "64"]);
    let ratio = v["ratio"].as_f64().unwrap();
    assert!((1.0 - 1e-9..=4.27).contains(&ratio), "{ratio}");
}

#[test]
fn all_norm_and_reduction_run() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path(), 4, 7, "tree");
    for algo in ["all-norm", "reduction"] {
        let v = json_out(&["solve", "--algo", algo, "--p", "2", "--instance", &inst]);
        assert!(v["ratio"].as_f64().unwrap() >= 1.0 - 1e-9, "{algo}");
        assert_eq!(v["route"].as_array().unwrap().len(), 7);
    }
}

#[test]
fn lp_round_small() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path(), 2, 5, "random_metric");
    let v = json_out(&["solve", "--algo", "lp-round", "--p", "2", "--instance", &inst, "--seed", "9", "--samples", "50"]);
    assert_eq!(v["runs"], 50);
    assert!(v["ratio"].as_f64().unwrap() >= 1.0 - 1e-9);
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = generate(dir.path(), 11, 8, "line");
    let bytes = std::fs::read(&a).unwrap();
    std::fs::remove_file(&a).unwrap();
    assert_eq!(std::fs::read(generate(dir.path(), 11, 8, "line")).unwrap(), bytes);

    let args = ["solve", "--algo", "cover", "--p", "3", "--instance", &a, "--seed", "5"];
    assert_eq!(lptsp(&args).stdout, lptsp(&args).stdout);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"n": 2, "starts": [0], "geometry": "general", "dist": [[0, 1], [2, 0]]}"#).unwrap();
    let out = lptsp(&["solve", "--algo", "exact", "--instance", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = lptsp(&["solve", "--algo", "exact", "--instance", "no-such-instance"]);
    assert_eq!(out.status.code(), Some(2));

    let inst = generate(dir.path(), 3, 6, "random_metric");
    let out = lptsp(&["solve", "--algo", "cover", "--instance", &inst]);
    assert_eq!(out.status.code(), Some(2), "missing seed");

    let big = generate(dir.path(), 3, 20, "random_metric");
    let out = lptsp(&["solve", "--algo", "exact", "--instance", &big]);
    assert_eq!(out.status.code(), Some(3));

    let out = Command::new(env!("CARGO_BIN_EXE_lptsp"))
        .args(["solve", "--algo", "exact", "--instance", &inst])
        .env("LPTSP_WORK_CAP", "exact=4")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn certify_single_criterion() {
    let out = lptsp(&["certify", "--only", "1"]);
    assert!(out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("PASS criterion  1 "), "{err}");
}
