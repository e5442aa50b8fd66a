use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn fkg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fkg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .display()
        .to_string()
}

fn json_report(args: &[&str]) -> (i32, Value) {
    let mut full = vec!["--format", "json"];
    full.extend_from_slice(args);
    let out = fkg(&full);
    let v = serde_json::from_slice(&out.stdout).expect("json report");
    (out.status.code().unwrap(), v)
}

#[test]
fn certificate_for_conjugate_m3_passes() {
    let out = fkg(&["certify", "--m", "3", "--kind", "conjugate"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("κ'_3 ≥ 0 certificate: PASS (third-order FKG)"));
    assert!(text.contains("monomials: 8"));
}

#[test]
fn plain_cumulant_certificate_fails_with_exit_one() {
    let (code, v) = json_report(&["certify", "--m", "3", "--kind", "cumulant"]);
    assert_eq!(code, 1);
    assert_eq!(v["outcome"], "violation");
    assert!(!v["payload"]["offending"].as_array().unwrap().is_empty());
}

#[test]
fn custom_spec_from_file() {
    let spec = data("custom_spec.json");
    let (code, v) = json_report(&["certify", "--m", "3", "--kind", "custom", "--coeffs", &spec]);
    assert_eq!(code, 0);
    assert_eq!(v["payload"]["pass"], true);
}

#[test]
fn usage_and_data_errors_exit_two() {
    assert_eq!(fkg(&["certify", "--m", "3", "--frobnicate"]).status.code(), Some(2));
    assert_eq!(fkg(&["nonsense"]).status.code(), Some(2));
    assert_eq!(fkg(&["certify", "--m", "3", "--kind", "custom"]).status.code(), Some(2));
    assert_eq!(fkg(&["sweep", "--m", "3", "--shape", "2,x"]).status.code(), Some(2));
    assert_eq!(fkg(&["sweep", "--m", "3", "--shift", "0.5"]).status.code(), Some(2));
    let out = fkg(&["apps", "psd", "--input", &data("psd_singular_rank.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("not MTP2"));
    assert_eq!(fkg(&["replay", "--witness", "/nonexistent/witness.json"]).status.code(), Some(2));
}

#[test]
fn sweep_output_is_byte_identical_across_runs() {
    let args = ["sweep", "--m", "3", "--trials", "10", "--seed", "1"];
    let a = fkg(&args);
    let b = fkg(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let json = ["--format", "json", "sweep", "--m", "4", "--trials", "8", "--seed", "7", "--shape", "2,3"];
    assert_eq!(fkg(&json).stdout, fkg(&json).stdout);
}

#[test]
fn thread_count_does_not_change_the_report() {
    let args = ["--format", "json", "sweep", "--m", "3", "--trials", "12", "--seed", "3"];
    let one = Command::new(env!("CARGO_BIN_EXE_fkg")).env("FKG_THREADS", "1").args(args).output().unwrap();
    let four = Command::new(env!("CARGO_BIN_EXE_fkg")).env("FKG_THREADS", "4").args(args).output().unwrap();
    assert_eq!(one.stdout, four.stdout);
    let bad = Command::new(env!("CARGO_BIN_EXE_fkg")).env("FKG_THREADS", "0").args(args).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn witness_round_trips_through_replay() {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let path = dir.join("cli_witness.json");
    let path_s = path.display().to_string();
    let (code, v) = json_report(&[
        "sweep", "--m", "3", "--trials", "20", "--seed", "2", "--shift", "5", "--witness-out", &path_s,
    ]);
    assert_eq!(code, 1);
    assert_eq!(v["outcome"], "violation");
    let stored = v["payload"]["first_witness"]["value"].clone();
    assert!(stored.as_str().unwrap().starts_with('-'));
    let (code, r) = json_report(&["replay", "--witness", &path_s]);
    assert_eq!(code, 1);
    assert_eq!(r["payload"]["replay"]["matches"], true);
    assert_eq!(r["payload"]["replay"]["recomputed"], stored);
}

#[test]
fn tampered_witness_is_rejected() {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let path = dir.join("cli_witness_tampered.json");
    let path_s = path.display().to_string();
    let out = fkg(&["sweep", "--m", "3", "--trials", "5", "--seed", "4", "--shift", "5", "--witness-out", &path_s]);
    assert_eq!(out.status.code(), Some(1));
    let mut w: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    w["value"] = Value::String("1/1".into());
    std::fs::write(&path, w.to_string()).unwrap();
    assert_eq!(fkg(&["replay", "--witness", &path_s]).status.code(), Some(2));
}

#[test]
fn paper_identities_pass() {
    let (code, v) = json_report(&["paper", "identities"]);
    assert_eq!(code, 0);
    assert_eq!(v["checks"].as_array().unwrap().len(), 8);
}

#[test]
fn paper_duplicate_certificate_passes() {
    let (code, v) = json_report(&["paper", "duplicate"]);
    assert_eq!(code, 0);
    assert_eq!(v["payload"]["chamber_form_agrees"], true);
}

#[test]
fn two_point_example_reports_the_sign_honestly() {
    let (code, v) = json_report(&["paper", "remark2.3"]);
    assert_eq!(code, 1);
    assert_eq!(v["payload"]["sets"][0]["gaps"]["difference"], "231603/3200");
    assert_eq!(v["payload"]["sets"][1]["gaps"]["difference"], "3884/75");
}

#[test]
fn every_application_input_passes() {
    for app in ["bernstein", "logconvex", "kleitman", "matrix", "psd", "ranking", "exchangeable"] {
        let input = data(&format!("{app}.json"));
        let (code, v) = json_report(&["apps", app, "--input", &input]);
        assert_eq!(code, 0, "{app}: {v}");
    }
    let (_, v) = json_report(&["apps", "bernstein", "--input", &data("bernstein.json")]);
    assert_eq!(v["payload"]["value"], "3/16");
}

#[test]
fn timing_is_opt_in() {
    let (_, v) = json_report(&["certify", "--m", "2"]);
    assert!(v.get("elapsed_ms").is_none());
    let (_, v) = json_report(&["--timing", "certify", "--m", "2"]);
    assert!(v["elapsed_ms"].is_number());
}

#[test]
fn certificate_search_rediscovers_the_conjugate_coefficients() {
    let (code, v) = json_report(&["feasibility", "--m", "3", "--bound", "3"]);
    assert_eq!(code, 0);
    let found = v["payload"]["found"].as_array().unwrap();
    assert!(found.contains(&serde_json::json!([2, -1, 1])));
}
