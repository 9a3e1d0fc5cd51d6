use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn cuntz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cuntz"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn construct(dir: &Path, object: &str, extra: &[&str]) -> String {
    let path = dir.join(format!("{object}.json")).to_string_lossy().into_owned();
    let mut args = vec!["construct", object, "--out", &path];
    args.extend_from_slice(extra);
    let out = cuntz(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn replicate_z2_passes() {
    let out = cuntz(&["replicate", "--group", "2", "--m", "10"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("result: PASS"));
    assert!(text.contains("½ log 2"));
    assert!(text.contains("citation"));
}

#[test]
fn replicate_json_is_tagged() {
    let out = cuntz(&["replicate", "--group", "3", "--m", "5", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let rows = v["entropy"]["rows"].as_array().unwrap();
    let provenances: Vec<_> = rows.iter().map(|r| r["provenance"].as_str().unwrap()).collect();
    assert!(provenances.contains(&"computed"));
    assert!(provenances.contains(&"citation"));
    assert!(provenances.contains(&"citation-derived"));
    assert_eq!(v["entropy"]["rho_prime"]["counts"][4], 243);
}

#[test]
fn replicate_trivial_group_is_usage_error() {
    assert_eq!(code(&cuntz(&["replicate", "--group", "1"])), 2);
    assert_eq!(code(&cuntz(&["replicate", "--group", "two"])), 2);
    assert_eq!(code(&cuntz(&["replicate"])), 2);
}

#[test]
fn replicate_bad_bracket_fails_check() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("g.json");
    std::fs::write(&path, r#"{"orders":[2],"bracket":[[1,0],[1,0],[1,0],[1,0]]}"#).unwrap();
    let out = cuntz(&["replicate", "--group-file", path.to_str().unwrap(), "--m", "3"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn check_masa_reports_witness_for_izumi() {
    let dir = TempDir::new().unwrap();
    let izumi = construct(dir.path(), "izumi", &["--group", "2"]);
    let out = cuntz(&["check", "masa", "--endo", &izumi, "--depth", "1", "--format", "json"]);
    assert_eq!(code(&out), 1);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["passed"], false);
    assert_eq!(v["witness"]["term"]["J"], serde_json::json!([0]));
    assert_eq!(v["witness"]["term"]["K"], serde_json::json!([1]));
    assert!((v["witness"]["term"]["re"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn pentagon_on_extracted_w_and_flip() {
    let dir = TempDir::new().unwrap();
    let w = construct(dir.path(), "w", &["--group", "2"]);
    assert_eq!(code(&cuntz(&["check", "pentagon", "--file", &w])), 0);
    assert_eq!(code(&cuntz(&["pentagon", "--file", &w])), 0);

    let flip = dir.path().join("flip.json");
    std::fs::write(
        &flip,
        r#"{"dim":4,"entries":[[1,0],[0,0],[0,0],[0,0],[0,0],[0,0],[1,0],[0,0],[0,0],[1,0],[0,0],[0,0],[0,0],[0,0],[0,0],[1,0]]}"#,
    )
    .unwrap();
    assert_eq!(code(&cuntz(&["check", "pentagon", "--file", flip.to_str().unwrap()])), 1);
}

#[test]
fn unitary_check() {
    let dir = TempDir::new().unwrap();
    let flip = construct(dir.path(), "flip", &["--n", "2"]);
    assert_eq!(code(&cuntz(&["check", "unitary", "--elem", &flip])), 0);
    let p = dir.path().join("p.json");
    std::fs::write(&p, r#"{"N":2,"terms":[{"re":1.0,"im":0.0,"J":[0],"K":[0]}]}"#).unwrap();
    assert_eq!(code(&cuntz(&["check", "unitary", "--elem", p.to_str().unwrap()])), 1);
}

#[test]
fn masa_emit_rule_then_entropy() {
    let dir = TempDir::new().unwrap();
    let rp = construct(dir.path(), "rho-prime", &["--group", "2"]);
    let rule = dir.path().join("rule.json");
    let rule = rule.to_str().unwrap();
    let out = cuntz(&["masa", "--endo", &rp, "--depth", "9", "--emit-rule", rule]);
    assert_eq!(code(&out), 0);
    let out = cuntz(&["entropy", "--rule", rule, "--n", "1", "--m", "10", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let counts: Vec<u64> = v["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).collect();
    assert_eq!(counts, (1..=10).map(|m| 1u64 << m).collect::<Vec<_>>());
    assert_eq!(v["h_ratio"].as_array().unwrap().len(), 9);
    assert_eq!(v["h_cumulative"].as_array().unwrap().len(), 10);

    // too deep for the stored tables
    assert_eq!(code(&cuntz(&["entropy", "--rule", rule, "--m", "20"])), 2);
}

#[test]
fn extract_rule_on_gamma_matches_constructed_rule() {
    let dir = TempDir::new().unwrap();
    let gamma = construct(dir.path(), "gamma", &["--group", "3"]);
    let out = cuntz(&["extract-rule", "--endo", &gamma, "--depth", "3"]);
    assert_eq!(code(&out), 0);
    let extracted: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let closed = construct(dir.path(), "rule", &["--group", "3", "--kind", "anchored-difference", "--depth", "3"]);
    let closed: Value = serde_json::from_str(&std::fs::read_to_string(closed).unwrap()).unwrap();
    assert_eq!(extracted["tables"], closed["tables"]);

    let izumi = construct(dir.path(), "izumi", &["--group", "3"]);
    assert_eq!(code(&cuntz(&["extract-rule", "--endo", &izumi, "--depth", "2"])), 1);
}

#[test]
fn malformed_inputs_exit_two() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    let bad_s = bad.to_str().unwrap();
    for body in ["", "{", "[1,2]", r#"{"N":2,"terms":[{"re":1,"im":0,"J":[5],"K":[]}]}"#, r#"{"N":0,"terms":[]}"#] {
        std::fs::write(&bad, body).unwrap();
        assert_eq!(code(&cuntz(&["check", "unitary", "--elem", bad_s])), 2, "{body}");
        assert_eq!(code(&cuntz(&["check", "masa", "--endo", bad_s])), 2, "{body}");
        assert_eq!(code(&cuntz(&["check", "pentagon", "--file", bad_s])), 2, "{body}");
        assert_eq!(code(&cuntz(&["entropy", "--rule", bad_s])), 2, "{body}");
        assert_eq!(code(&cuntz(&["apply", "--endo", bad_s, "--elem", bad_s])), 2, "{body}");
    }
    assert_eq!(code(&cuntz(&["check", "unitary", "--elem", "/nonexistent/x.json"])), 2);
    assert_eq!(code(&cuntz(&["--eq-tol", "5", "check", "closed-forms", "--group", "2"])), 2);
}

#[test]
fn non_unitary_endomorphism_file_is_rejected() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("p.json");
    std::fs::write(&p, r#"{"N":2,"terms":[{"re":1.0,"im":0.0,"J":[0],"K":[0]}]}"#).unwrap();
    assert_eq!(code(&cuntz(&["check", "phi", "--endo", p.to_str().unwrap()])), 2);
}

#[test]
fn phi_and_closed_forms() {
    let dir = TempDir::new().unwrap();
    let izumi = construct(dir.path(), "izumi", &["--group", "2x2"]);
    let out = cuntz(&["check", "phi", "--endo", &izumi, "--random", "10", "--seed", "3", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["seed"], 3);
    assert_eq!(code(&cuntz(&["check", "closed-forms", "--group", "4"])), 0);
}

#[test]
fn commutant_and_apply() {
    let dir = TempDir::new().unwrap();
    let shift = construct(dir.path(), "shift", &["--n", "2"]);
    let out = cuntz(&["commutant", "--endo", &shift, "--k", "1", "--m", "2", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["commutant_dimension"], 4);

    let id = construct(dir.path(), "identity", &["--n", "2"]);
    let flip = construct(dir.path(), "flip", &["--n", "2"]);
    let out = cuntz(&["apply", "--endo", &id, "--elem", &flip, "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["N"], 2);
    assert_eq!(v["terms"].as_array().unwrap().len(), 4);
}
