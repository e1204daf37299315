use std::path::{Path, PathBuf};

use serde_json::Value;
use sumnorm::cli::{run_with, EXIT_CHECK_FAILED, EXIT_INPUT, EXIT_OK};
use sumnorm::seqclass::NormResult;
use sumnorm::summing::SummingEstimate;
use sumnorm::verify::CheckReport;

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data").join(name).display().to_string()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sumnorm-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("sumnorm").chain(args.iter().copied());
    let code = run_with(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn norm_of_scalar_identity_block() {
    let json = scratch("norm.json");
    let (code, out, err) =
        run(&["norm", "--spec", &data("lp2_spec.json"), "--seq", &data("identity_seq.json"), "--output", json.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.starts_with("# seed 0\n"), "{out}");
    assert!(out.contains("1.414213562373"), "{out}");
    assert!(out.contains("EXACT"));
    let text = std::fs::read_to_string(&json).unwrap();
    let r: NormResult = serde_json::from_str(&text).unwrap();
    assert!((r.value - 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(serde_json::to_string_pretty(&r).unwrap() + "\n", text);
}

#[test]
fn estimate_identity_product() {
    let json = scratch("estimate.json");
    let (code, out, err) = run(&["estimate", "--problem", &data("i2_problem.json"), "--seed", "3", "--output", json.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.starts_with("# seed 3\n"));
    let est: SummingEstimate = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert!(est.value >= 0.999 && est.value <= 1.0 + 1e-9, "{}", est.value);
    assert_eq!(est.witnesses.len(), 2);
}

#[test]
fn verify_unit_norm_passes_on_defaults() {
    let (code, out, _) = run(&["verify", "--suite", "UNIT_NORM", "--samples", "10"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("UNIT_NORM") && out.contains("overall: PASS"), "{out}");
}

#[test]
fn verify_reports_failure_with_exit_one() {
    let cfg = scratch("mutated.json");
    std::fs::write(&cfg, r#"{"seed": 2, "samples": 6, "mutation": "LP_WRONG_EXPONENT"}"#).unwrap();
    let json = scratch("mutated-report.json");
    let (code, out, _) =
        run(&["verify", "--suite", "MULT1", "--config", cfg.to_str().unwrap(), "--output", json.to_str().unwrap()]);
    assert_eq!(code, EXIT_CHECK_FAILED, "{out}");
    assert!(out.starts_with("# seed 2\n"));
    let report: CheckReport = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert!(!report.passed);
    assert!(report.properties[0].counterexample.is_some());
}

#[test]
fn malformed_json_is_an_input_error_with_position() {
    let bad = scratch("bad_spec.json");
    std::fs::write(&bad, "{\n  \"kind\": \"WEAK\",\n  \"p\": [2]\n}\n").unwrap();
    let (code, _, err) = run(&["norm", "--spec", bad.to_str().unwrap(), "--seq", &data("identity_seq.json")]);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("line 3") && err.contains("`p`"), "{err}");

    let broken = scratch("broken.json");
    std::fs::write(&broken, "{\"kind\": \"LP\", ").unwrap();
    let (code, _, err) = run(&["norm", "--spec", broken.to_str().unwrap(), "--seq", &data("identity_seq.json")]);
    assert_eq!(code, EXIT_INPUT);
    assert!(err.contains("line 1"), "{err}");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["verify", "--suite", "NOT_A_PROPERTY"]).0, EXIT_INPUT);
    assert_eq!(run(&["norm", "--spec", "missing.json"]).0, EXIT_INPUT);
    assert_eq!(run(&["frobnicate"]).0, EXIT_INPUT);
    assert_eq!(run(&["norm", "--spec", "/nonexistent/a.json", "--seq", "/nonexistent/b.json"]).0, EXIT_INPUT);
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("estimate"));
}

#[test]
fn identical_runs_are_byte_identical() {
    let args = ["verify", "--suite", "SYMMETRY,CH1", "--seed", "7", "--samples", "5"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a, b);
    let report_json = scratch("det.json");
    let mut with_out = args.to_vec();
    with_out.extend(["--output", report_json.to_str().unwrap()]);
    run(&with_out);
    let first = std::fs::read(&report_json).unwrap();
    run(&with_out);
    assert_eq!(first, std::fs::read(&report_json).unwrap());
    let v: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(v["seed"], 7);
}
