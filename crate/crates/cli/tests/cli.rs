use std::path::PathBuf;
use std::process::Command;

use idvoi_cli::{run, EXIT_DOMAIN, EXIT_OK, EXIT_USAGE};
use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn idvoi(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("idvoi").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

#[test]
fn validate_accepts_fixtures() {
    for f in ["fig4.json", "fig8.json", "weather_vendor.json", "single_chance.json"] {
        let (code, out, _) = idvoi(&["validate", &fixture(f)]);
        assert_eq!(code, EXIT_OK, "{f}");
        assert!(out.is_empty());
    }
}

#[test]
fn validate_lists_violations() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let mut doc = json(&std::fs::read_to_string(fixture("weather_vendor.json")).unwrap());
    doc["cpts"][0]["values"] = serde_json::json!([0.7, 0.2]);
    std::fs::write(&path, doc.to_string()).unwrap();
    let (code, out, _) = idvoi(&["validate", path.to_str().unwrap(), "--json"]);
    assert_eq!(code, EXIT_DOMAIN);
    assert_eq!(json(&out)["violations"][0]["rule"], "normalization");

    std::fs::write(&path, "{\n  \"variables\": [,\n}").unwrap();
    let (code, _, err) = idvoi(&["validate", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn solve_prints_solution() {
    let (code, out, _) = idvoi(&["solve", &fixture("single_decision.json"), "--json"]);
    assert_eq!(code, EXIT_OK);
    let doc = json(&out);
    assert_eq!(doc["meu"], 5.0);
    assert_eq!(doc["propagations"], 1);
    assert_eq!(doc["policies"][0]["actions"], serde_json::json!(["high"]));
}

#[test]
fn json_output_is_byte_stable() {
    let args = ["value", &fixture("fig4.json"), "--decision", "D_1", "--candidates", "B,C", "--json"];
    let (_, a, _) = idvoi(&args);
    let (_, b, _) = idvoi(&args);
    assert_eq!(a, b);
}

#[test]
fn bad_state_is_a_usage_error_naming_legal_states() {
    let (code, _, err) = idvoi(&["solve", &fixture("fig4.json"), "--evidence", "A=badstate"]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("`A`") && err.contains("a0, a1"), "{err}");
    let (code, _, _) = idvoi(&["solve", &fixture("fig4.json"), "--evidence", "A"]);
    assert_eq!(code, EXIT_USAGE);
    let (code, _, _) = idvoi(&["solve"]);
    assert_eq!(code, EXIT_USAGE);
    let (code, _, _) = idvoi(&["frobnicate"]);
    assert_eq!(code, EXIT_USAGE);
}

#[test]
fn future_evidence_is_a_domain_error() {
    let (code, _, err) = idvoi(&["solve", &fixture("fig4.json"), "--evidence", "B=b0"]);
    assert_eq!(code, EXIT_DOMAIN);
    assert!(err.contains("future"), "{err}");
}

#[test]
fn value_matches_oracle_move() {
    let (code, out, _) = idvoi(&[
        "value",
        &fixture("fig4.json"),
        "--decision",
        "D_1",
        "--candidates",
        "B",
        "--method",
        "expand",
        "--json",
    ]);
    assert_eq!(code, EXIT_OK);
    let report = json(&out);
    let voi = report["candidates"][0]["voi"].as_f64().unwrap();
    let (code, out, _) = idvoi(&["oracle", &fixture("fig4.json"), "--move", "B:to=I_0", "--json"]);
    assert_eq!(code, EXIT_OK);
    let oracle = json(&out)["difference"].as_f64().unwrap();
    assert!((voi - oracle).abs() < 1e-9, "{voi} vs {oracle}");
}

#[test]
fn value_to_sets_the_comparison_placement() {
    // h before D_3 versus h observed only at the end (I_4)
    let base = ["value", &fixture("fig8.json"), "--decision", "D_2", "--candidates", "h"];
    let ev = ["--evidence", "D_1=x0", "--json"];
    let run_with = |extra: &[&str]| {
        let args: Vec<&str> = base.iter().chain(extra).chain(&ev).copied().collect();
        let (code, out, err) = idvoi(&args);
        assert_eq!(code, EXIT_OK, "{err}");
        json(&out)["candidates"][0]["voi"].as_f64().unwrap()
    };
    let modeled = run_with(&[]);
    let at_end = run_with(&["--to", "I_4"]);
    let before_d3 = run_with(&["--to", "I_2"]);
    assert!((modeled - at_end).abs() < 1e-12);
    assert!(at_end >= before_d3 - 1e-9);
}

#[test]
fn illegal_moves_are_rejected_everywhere() {
    let (code, _, err) = idvoi(&["oracle", &fixture("fig8.json"), "--move", "h:to=I_0"]);
    assert_eq!(code, EXIT_DOMAIN);
    assert!(err.contains("below lower bound I_1"), "{err}");
    let (code, _, err) = idvoi(&["oracle", &fixture("fig8.json"), "--move", "k:to=I_2"]);
    assert_eq!(code, EXIT_DOMAIN);
    assert!(err.contains("decision D_3 (D_3) influences k"), "{err}");
    let (code, out, _) = idvoi(&[
        "value",
        &fixture("fig8.json"),
        "--decision",
        "D_1",
        "--candidates",
        "h",
        "--json",
    ]);
    assert_eq!(code, EXIT_OK);
    let c = &json(&out)["candidates"][0];
    assert_eq!(c["legal"], false);
    assert!(c["reason"].as_str().unwrap().contains("below lower bound I_1"));
    assert!(c.get("voi").is_none());
}

#[test]
fn posterior_prints_marginals() {
    let (code, out, _) = idvoi(&[
        "posterior",
        &fixture("weather_vendor.json"),
        "--targets",
        "Weather",
        "--evidence",
        "Forecast=sunny",
        "--json",
    ]);
    assert_eq!(code, EXIT_OK);
    let p = json(&out)["Weather"]["sunny"].as_f64().unwrap();
    assert!((p - 0.56 / 0.635).abs() < 1e-12);
}

#[test]
fn binary_reports_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_idvoi");
    let ok = Command::new(bin).args(["solve", &fixture("fig4.json")]).output().unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8_lossy(&ok.stdout).starts_with("MEU: 67.408"));
    let bad = Command::new(bin)
        .args(["solve", &fixture("fig4.json"), "--evidence", "A=badstate"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_USAGE));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("legal states"));
}
