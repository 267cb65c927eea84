use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn anholkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anholkit")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn analyze(name: &str, extra: &[&str]) -> Output {
    let path = scenario(name);
    let mut args = vec!["analyze", "--input", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    anholkit(&args)
}

#[test]
fn flat_scenario_passes() {
    let out = analyze("euclidean_finsler.json", &["--no-timing"]);
    assert_eq!(code(&out), 0);
    let report = stdout_json(&out);
    assert_eq!(report["pass"], Value::Bool(true));
    assert_eq!(report["checks"].as_array().unwrap().len(), 5);
    assert!(report.get("timing").is_none());
}

#[test]
fn sphere_scenario_passes() {
    let out = analyze("sphere.json", &[]);
    assert_eq!(code(&out), 0);
    let report = stdout_json(&out);
    let names: Vec<&str> = report["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["riemann_reduction", "scalar_curvature", "metricity"]);
}

#[test]
fn failing_check_exits_one_with_report() {
    let out = analyze("failing_check.json", &[]);
    assert_eq!(code(&out), 1);
    assert_eq!(stdout_json(&out)["pass"], Value::Bool(false));
}

#[test]
fn malformed_expression_exits_two_with_offset() {
    let out = analyze("malformed_expression.json", &[]);
    assert_eq!(code(&out), 2);
    let body = stdout_json(&out);
    assert_eq!(body["error"]["kind"], "Syntax");
    assert_eq!(body["error"]["offset"], 12);
}

#[test]
fn missing_input_exits_two() {
    assert_eq!(code(&anholkit(&["analyze"])), 2);
    assert_eq!(code(&anholkit(&["analyze", "--input", "/nonexistent/scenario.json"])), 2);
}

#[test]
fn reports_are_byte_identical_across_workers() {
    let one = analyze("randers.json", &["--no-timing", "--jobs", "1"]);
    let four = analyze("randers.json", &["--no-timing", "--jobs", "4"]);
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn tolerance_scale_can_fail_a_passing_scenario() {
    assert_eq!(code(&analyze("randers.json", &["--tolerance-scale", "1e-30"])), 1);
    assert_eq!(code(&analyze("randers.json", &["--tolerance-scale", "-1"])), 2);
}

#[test]
fn csv_check_table() {
    let out = analyze("hamilton_flat.json", &["--format", "csv"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("check,max_residual,mean_residual,tolerance,samples,pass\n"));
    assert!(text.contains("flat_zero,"));
}

#[test]
fn sphere_grid_has_constant_scalar_column() {
    let (input, spec) = (scenario("sphere.json"), scenario("sphere_theta_grid.json"));
    let out = anholkit(&["grid", "--input", input.to_str().unwrap(), "--grid", spec.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let mut reader = csv::Reader::from_reader(out.stdout.as_slice());
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["x1", "status", "g_22", "N_1_2", "R_h_1_2_1_2", "scalar"]);
    let mut rows = 0;
    for rec in reader.records() {
        let rec = rec.unwrap();
        assert_eq!(&rec[1], "ok");
        let scalar: f64 = rec[5].parse().unwrap();
        assert!((scalar - 2.0).abs() < 1e-6);
        rows += 1;
    }
    assert_eq!(rows, 12);
}

#[test]
fn grid_axis_mismatch_exits_two() {
    let dir = std::env::temp_dir().join(format!("anholkit-grid-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let spec = dir.join("bad_grid.json");
    std::fs::write(&spec, r#"{"axes": [{"coord": "z9", "from": 0, "to": 1, "steps": 3}], "base": [1, 0, 1, 0], "fields": ["scalar"]}"#).unwrap();
    let input = scenario("sphere.json");
    let out = anholkit(&["grid", "--input", input.to_str().unwrap(), "--grid", spec.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn verify_suites() {
    let out = anholkit(&["verify", "--suite", "clifford", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let ids: Vec<u64> = stdout_json(&out)["criteria"].as_array().unwrap().iter().map(|c| c["id"].as_u64().unwrap()).collect();
    assert_eq!(ids, [8, 9, 10, 11, 12]);
    assert_eq!(code(&anholkit(&["verify", "--suite", "nosuch"])), 2);
}

#[test]
fn clifford_commands() {
    let out = anholkit(&["clifford", "rep", "--p", "2", "--q", "0"]);
    assert_eq!(code(&out), 0);
    let rep = stdout_json(&out);
    assert_eq!(rep["matrices"].as_array().unwrap().len(), 2);
    assert_eq!(rep["dimension"], 2);
    assert_eq!(rep["anticommutation_residual"].as_f64().unwrap(), 0.0);

    assert_eq!(code(&anholkit(&["clifford", "check", "--p", "3", "--q", "1"])), 0);
    assert_eq!(code(&anholkit(&["clifford", "rep", "--p", "8", "--q", "5"])), 2);
    assert_eq!(code(&anholkit(&["clifford", "epsilon", "--p", "4"])), 0);

    let demo = stdout_json(&anholkit(&["clifford", "spin-demo", "--p", "3", "--angle", "0.4"]));
    assert!((demo["determinant"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(demo["orthogonality_residual"].as_f64().unwrap() < 1e-12);

    let d = stdout_json(&anholkit(&["clifford", "rep", "--p", "2", "--vp", "2"]));
    assert_eq!(d["dimension"], 4);
}

#[test]
fn output_flag_writes_file() {
    let path = std::env::temp_dir().join(format!("anholkit-report-{}.json", std::process::id()));
    let out = analyze("hamilton_flat.json", &["--output", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report["pass"], Value::Bool(true));
    std::fs::remove_file(path).unwrap();
}
