use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twisted-thue")).args(args).output().unwrap()
}

fn rows(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn form_build_prints_golden_coefficients() {
    let spec = fixture("x3m2.json");
    let out = run(&["form", "build", "--spec", &spec, "--unit-exponent", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = rows(&out);
    assert_eq!(r[0]["type"], "header");
    assert_eq!(r[0]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(r[1]["coefficients"], serde_json::json!([1, 0, 6, -2]));
}

#[test]
fn thue_solve_finds_one_three() {
    let spec = fixture("x3m2.json");
    let out = run(&["thue", "solve", "--spec", &spec, "--m", "2", "--box", "1000", "--unit-exponent", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = rows(&out);
    assert!(r.iter().any(|v| v["type"] == "solution" && v["x"] == 1 && v["y"] == 3 && v["value"] == 1));
}

#[test]
fn reducible_polynomial_is_rejected() {
    let out = run(&["field", "check", "--spec", &fixture("reducible.json")]);
    assert_eq!(out.status.code(), Some(2));
    let r = rows(&out);
    let err = r.last().unwrap();
    assert_eq!(err["type"], "error");
    assert!(err["reason"].as_str().unwrap().contains("reducible"));
}

#[test]
fn invalid_flags_exit_two() {
    let spec = fixture("x3m2.json");
    assert_eq!(run(&["units", "classify", "--spec", &spec, "--nu", "3/2"]).status.code(), Some(2));
    assert_eq!(run(&["thue", "solve", "--spec", &spec, "--unit-exponent", "1,2"]).status.code(), Some(2));
    assert_eq!(run(&["field", "check", "--spec", &spec, "--precision", "8192"]).status.code(), Some(2));
}

#[test]
fn output_is_deterministic() {
    let spec = fixture("x3m2.json");
    let args = ["thue", "family", "--spec", &spec, "--m", "2", "--house-bound", "100", "--box", "200"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let vol = ["density", "volume", "--signature", "2,1", "--region", "D", "--nu", "3/10", "--samples", "20000", "--seed", "7"];
    assert_eq!(run(&vol).stdout, run(&vol).stdout);
}

#[test]
fn family_reports_norm_bridge_and_kappa() {
    let spec = fixture("x3m2.json");
    let out = run(&["thue", "family", "--spec", &spec, "--m", "2", "--house-bound", "100", "--box", "1000"]);
    assert_eq!(out.status.code(), Some(0));
    let r = rows(&out);
    let sols: Vec<&Value> = r.iter().filter(|v| v["type"] == "solution").collect();
    assert_eq!(sols.len(), 8);
    assert!(sols.iter().all(|v| v["norm_bridge"] == true));
    let summary = r.last().unwrap();
    assert!(summary["kappa_emp"]["mid"].as_str().unwrap().starts_with("1.58496250072"));
}

#[test]
fn trace_is_one_document() {
    let spec = fixture("x3m2.json");
    let out = run(&["trace", "--spec", &spec, "--m", "2", "--x", "1", "--y", "3", "--unit-exponent", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["type"], "trace");
    assert_eq!(doc["B"], 3);
    assert_eq!(doc["header"]["command"], "trace");
    assert!(doc["consistency"].as_array().unwrap().iter().all(|c| c["ok"] == true));
}

#[test]
fn csv_output_has_commented_header() {
    let spec = fixture("x3m2.json");
    let out = run(&["units", "classify", "--spec", &spec, "--house-bound", "e^5", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# {"));
    assert!(lines.next().unwrap().contains("in_E_nu"));
}

#[test]
fn density_commands_run() {
    let spec = fixture("x3m2.json");
    let out = run(&["density", "count", "--spec", &spec, "--region", "H", "--region-m", "5"]);
    assert_eq!(rows(&out).last().unwrap()["count"], 22);
    let out = run(&["density", "volume", "--signature", "1,1", "--region", "H", "--samples", "1000"]);
    assert_eq!(rows(&out)[1]["exact"], "3");
    let out = run(&["density", "series", "--spec", &spec, "--grid", "e^5,e^10"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(rows(&out).len(), 3);
}
