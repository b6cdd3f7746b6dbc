//! End-to-end checks of the `cmi-lab` binary: output tables, exit codes,
//! determinism across runs and thread counts.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cmi-lab"))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

const THRESHOLD_CONFIG: &str = r#"{
  "mode": "cmi",
  "learner": "threshold",
  "dist": {"continuous": {"family": "uniform-interval", "lo": 0.0, "hi": 1.0,
           "target": {"threshold": 0.5}}},
  "ns": [3, 5],
  "draws": 10,
  "seed": 2,
  "bounds": ["stable-compression", "information-ceiling"]
}"#;

#[test]
fn estimate_prints_the_table_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "c.json", THRESHOLD_CONFIG);
    let out = bin().args(["estimate", "--config", &config]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,mean_nats,stderr,draws,mode");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("3,") && lines[2].starts_with("5,"));
}

#[test]
fn runs_are_deterministic_across_invocations_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "c.json", THRESHOLD_CONFIG);
    let a = bin().args(["estimate", "--config", &config]).output().unwrap();
    let b = bin().args(["estimate", "--config", &config]).output().unwrap();
    let single = bin()
        .args(["estimate", "--config", &config])
        .env("CMI_LAB_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(stdout(&a), stdout(&single));
}

#[test]
fn audit_prints_reports_and_flags_verdicts_in_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "c.json", THRESHOLD_CONFIG);
    let out = bin().args(["audit", "--config", &config]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("name,measured,stderr,bound,slack,verdict\n"));
    // Two audited budgets per swept n.
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",pass")));
}

#[test]
fn a_failed_budget_exits_one() {
    // A memorizing rule audited against the information budget of a class
    // that can store nothing: the verdict must fail, and failing is exit 1.
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "c.json",
        r#"{
          "mode": "ecmi",
          "learner": "predict-one",
          "class": {"domain": 8, "hypotheses": [[0, 0, 0, 0, 0, 0, 0, 0]]},
          "dist": {"finite": {"atoms": [
            [0, 0, "1/8"], [1, 0, "1/8"], [2, 0, "1/8"], [3, 0, "1/8"],
            [4, 0, "1/8"], [5, 0, "1/8"], [6, 0, "1/8"], [7, 0, "1/8"]
          ]}},
          "n": 3,
          "draws": 6,
          "seed": 5,
          "bounds": ["vc-ecmi"]
        }"#,
    );
    let out = bin().args(["audit", "--config", &config]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().ends_with(",fail"));
}

#[test]
fn configuration_problems_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    // Missing file.
    let out = bin().args(["estimate", "--config", "/nonexistent.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    // Unknown field.
    let config = write(
        dir.path(),
        "bad.json",
        r#"{"mode": "cmi", "learner": "threshold", "n": 3, "draws": 5, "seed": 1, "typo": true}"#,
    );
    let out = bin().args(["estimate", "--config", &config]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    // Bad thread cap.
    let ok = write(dir.path(), "ok.json", THRESHOLD_CONFIG);
    let out = bin()
        .args(["estimate", "--config", &ok])
        .env("CMI_LAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn json_flag_emits_the_full_record() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "c.json", THRESHOLD_CONFIG);
    let out = bin()
        .args(["estimate", "--config", &config, "--json"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(value["mode"], "cmi");
    assert_eq!(value["rows"].as_array().unwrap().len(), 2);
    assert_eq!(value["reports"].as_array().unwrap().len(), 4);
    assert!(value["config_hash"].as_str().unwrap().len() == 16);
}

#[test]
fn lowerbound_reports_both_floors() {
    let out = bin()
        .args(["lowerbound", "--n", "4", "--draws", "20", "--seed", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.starts_with("name,measured,stderr,bound,slack,verdict\n"));
    assert!(text.contains("recovered-bits/n=4"));
    assert!(text.contains("analytic-floor/n=4"));
}

const SMALL_CLASS: &str = r#"{
  "domain": 4,
  "hypotheses": [[0,0,0,0],[1,0,0,0],[1,1,0,0],[1,1,1,0],[1,1,1,1]]
}"#;

#[test]
fn oig_emits_an_oriented_graph() {
    let dir = tempfile::tempdir().unwrap();
    let class = write(dir.path(), "class.json", SMALL_CLASS);
    let out = bin().args(["oig", "--class", &class, "--n", "4"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let edges = value["edges"].as_array().unwrap();
    let orientation = value["orientation"].as_array().unwrap();
    assert_eq!(edges.len(), orientation.len());
    assert!(!edges.is_empty());
    let bound = value["degree_bound"].as_u64().unwrap();
    assert!(value["max_out_degree"].as_u64().unwrap() <= bound);
    // Every oriented head is an endpoint of its edge.
    for (e, head) in edges.iter().zip(orientation) {
        let h = head.as_u64().unwrap();
        assert!(h == e["a"].as_u64().unwrap() || h == e["b"].as_u64().unwrap());
    }
}

#[test]
fn combinatorics_prints_class_figures() {
    let dir = tempfile::tempdir().unwrap();
    let class = write(dir.path(), "class.json", SMALL_CLASS);
    let out = bin().args(["combinatorics", "--class", &class]).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.starts_with("quantity,value\n"));
    assert!(text.contains("\nvc,1\n"));
    assert!(text.contains("\nstar,2\n"));
    assert!(text.contains("\ngrowth[4],5\n"));
    let trimmed = bin()
        .args(["combinatorics", "--class", &class, "--n", "2"])
        .output()
        .unwrap();
    assert!(stdout(&trimmed).contains("\ngrowth[2],3\n"));
}
