use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orthosearch"))
        .args(args)
        .current_dir(dir)
        .env_remove("RUST_LOG")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], dir: &Path) -> String {
    let out = run(args, dir);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn generate_decompose_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["generate", "--vertices", "20", "--seed", "7", "-o", "poly.json"], d);
    let poly: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("poly.json")).unwrap()).unwrap();
    assert_eq!(poly["vertices"].as_array().unwrap().len(), 20);

    ok(&["decompose", "--poly", "poly.json", "--seed", "3", "-o", "rects.json"], d);
    let rects: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("rects.json")).unwrap()).unwrap();
    assert!(!rects["rects"].as_array().unwrap().is_empty());
    assert!(rects["junctions"].is_array());

    let out = ok(
        &["simulate", "--poly", "poly.json", "--strategy", "rs", "--k", "4", "--intruder", "random", "--seed", "42", "--trace", "t.jsonl"],
        d,
    );
    let result: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(result["strategy"], "rs");
    let steps = result["steps"].as_u64().unwrap();
    let trace = std::fs::read_to_string(d.join("t.jsonl")).unwrap();
    assert_eq!(trace.lines().count() as u64, steps + 1);
    let first: serde_json::Value = serde_json::from_str(trace.lines().next().unwrap()).unwrap();
    assert_eq!(first["robots"].as_array().unwrap().len(), 4);
}

#[test]
fn comb_from_instance_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("inst.json"), r#"{"S":[1,2,3,1,2,3],"q":2,"T":6}"#).unwrap();
    ok(&["comb", "--spec", "inst.json", "--width", "1", "--base-height", "2", "-o", "comb.json"], d);
    assert!(d.join("comb.json").exists());
    std::fs::write(d.join("bad.json"), r#"{"S":[1,2,3,1,2,4],"q":2,"T":6}"#).unwrap();
    assert!(!run(&["comb", "--spec", "bad.json"], d).status.success());
}

#[test]
fn curve_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["curve", "--width", "3", "--height", "3", "--repair"], dir.path());
    let cells: Vec<[i32; 2]> = serde_json::from_str(&out).unwrap();
    assert!(cells.len() >= 9);
    assert_eq!(cells[0], [0, 0]);
    assert!(cells.windows(2).all(|w| (w[0][0] - w[1][0]).abs() + (w[0][1] - w[1][1]).abs() == 1));
}

#[test]
fn sweep_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let spec = r#"{
        "instances": [{"id": "c", "comb": {"base_height": 2, "spike_lengths": [4, 5], "spike_width": 1, "spike_gap": 1}}],
        "strategies": ["sfc", "rs", "baseline"],
        "k_values": [2, 4, 6],
        "intruders": ["static"],
        "trials": 6
    }"#;
    std::fs::write(d.join("sweep.json"), spec).unwrap();
    ok(&["sweep", "--spec", "sweep.json", "-o", "a.csv"], d);
    let one = Command::new(env!("CARGO_BIN_EXE_orthosearch"))
        .args(["sweep", "--spec", "sweep.json", "-o", "b.csv"])
        .env("ORTHOSEARCH_WORKERS", "1")
        .current_dir(d)
        .status()
        .unwrap();
    assert!(one.success());
    let a = std::fs::read(d.join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(d.join("b.csv")).unwrap());
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 10);

    ok(&["plot", "--csv", "a.csv", "--kind", "line", "-o", "fig.svg"], d);
    let svg = std::fs::read_to_string(d.join("fig.svg")).unwrap();
    assert_eq!(svg.matches("class=\"series\"").count(), 3);
}

#[test]
fn preset_spec_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["preset", "beta", "--spec-only"], dir.path());
    let spec: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(spec["instances"].as_array().unwrap().len(), 5);
    assert_eq!(spec["k_values"], serde_json::json!([25]));
    assert!(!run(&["preset", "nope"], dir.path()).status.success());
    assert!(!run(&["simulate", "--poly", "missing.json", "--strategy", "rs", "--k", "2"], dir.path()).status.success());
    assert!(!run(&["simulate", "--poly", "x.json", "--strategy", "zig", "--k", "2"], dir.path()).status.success());
}
