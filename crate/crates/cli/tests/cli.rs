use std::process::Command;

use transgress_cli::{run, EXIT_CONFIG, EXIT_FAIL, EXIT_PASS};

fn invoke(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(std::iter::once("transgress").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn verify_writes_a_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let (code, _, err) = invoke(&["verify", "--scenario", "disk_winding_d2", "--out", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_PASS, "{err}");
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(report["scenario"], "disk_winding_d2");
    assert_eq!(report["passed"], true);
    for check in report["checks"].as_array().unwrap() {
        for key in ["check_id", "lhs", "rhs", "abs_err", "tolerance", "pass"] {
            assert!(check.get(key).is_some(), "missing {key}");
        }
    }
    assert!(report["timestamp"].as_str().is_some_and(|t| !t.is_empty()));
    assert!(err.contains("PASS"));
}

#[test]
fn unknown_scenario_is_a_configuration_error_listing_the_library() {
    let (code, _, err) = invoke(&["verify", "--scenario", "no_such_thing"]);
    assert_eq!(code, EXIT_CONFIG);
    assert!(err.contains("disk_winding_d2") && err.contains("gauss_bonnet_torus"), "{err}");
}

#[test]
fn bad_arguments_are_configuration_errors() {
    assert_eq!(invoke(&["verify"]).0, EXIT_CONFIG);
    assert_eq!(invoke(&["verify", "--scenario", "disk_winding_d1", "--fd-step", "0.5"]).0, EXIT_CONFIG);
    assert_eq!(invoke(&["verify", "--scenario", "disk_winding_d1", "--order", "1"]).0, EXIT_CONFIG);
    assert_eq!(invoke(&["frobnicate"]).0, EXIT_CONFIG);
}

#[test]
fn failing_checks_exit_with_one() {
    // four Gauss points in colatitude cannot resolve the sphere integral to 1e-6
    let (code, out, err) = invoke(&["verify", "--scenario", "ball_shift_axis", "--order", "4"]);
    assert_eq!(code, EXIT_FAIL);
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["passed"], false);
    assert!(err.contains("INCONCLUSIVE"), "{err}");
}

#[test]
fn sweep_emits_the_convergence_table() {
    let (code, out, err) = invoke(&["sweep", "--scenario", "fiber_n1_circle", "--orders", "4,8"]);
    assert_eq!(code, EXIT_PASS, "{err}");
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("order,value,error_estimate"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][0], "4");
    assert!((rows[1][1].parse::<f64>().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn list_names_every_shipped_scenario() {
    let (code, out, _) = invoke(&["list"]);
    assert_eq!(code, EXIT_PASS);
    let names: Vec<&str> = out.lines().map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(names, transgress_core::harness::scenario_names());
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_transgress");
    let ok = Command::new(bin).args(["verify", "--scenario", "fiber_n1_circle"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_PASS));
    serde_json::from_slice::<serde_json::Value>(&ok.stdout).unwrap();
    let bad = Command::new(bin).args(["verify", "--scenario", "fiber_n1_circle"]).env("TRANSGRESS_THREADS", "zero").output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_CONFIG));
}

#[test]
fn reports_match_the_documented_schema() {
    let schema: serde_json::Value = serde_json::from_str(include_str!("../../../docs/report.schema.json")).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    // every kind, skipping the two slow n = 3 cube scenarios
    for name in transgress_core::harness::scenario_names().into_iter().filter(|n| !n.ends_with("_n3")) {
        let report = transgress_core::harness::run_named(name, &Default::default()).unwrap();
        let value: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
        let errors: Vec<String> = validator.iter_errors(&value).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{name}: {errors:?}");
    }
    let bad = serde_json::json!({"scenario": "x", "kind": "nonsense", "checks": [], "quadrature": {"order": 24, "subdivision": 1}, "fd_step": 1e-5, "passed": true, "timestamp": ""});
    assert!(!validator.is_valid(&bad));
}
