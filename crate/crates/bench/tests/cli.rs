//! End-to-end runs of the command-line binary.

use std::process::{Command, Output};

use negmom_core::cfr::{ConvergenceLog, CSV_HEADER};

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_negmom-bench")).args(args).output().expect("binary runs")
}

#[test]
fn solve_writes_csv_with_one_row_per_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rm.csv");
    let status = bench(&["solve", "--game", "3x3", "--algo", "rm+", "--iters", "10", "--out", out.to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().any(|l| l == CSV_HEADER));
    assert!(text.starts_with("# game=3x3\n# algorithm=rm+\n"));
    let log = ConvergenceLog::from_csv(&text).unwrap();
    assert_eq!(log.rows.len(), 10);
    assert!(log.metadata.alternating);
}

#[test]
fn config_file_and_flags_layer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let out = dir.path().join("kuhn.csv");
    std::fs::write(&cfg, r#"{"preset": "table2/kuhn/dmogda", "iterations": 40}"#).unwrap();
    let status = bench(&["solve", "--config", cfg.to_str().unwrap(), "--eval-every", "20", "--out", out.to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let log = ConvergenceLog::from_csv(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(log.rows.iter().map(|r| r.iteration).collect::<Vec<_>>(), [20, 40]);
    assert_eq!(log.metadata.eta, Some(2.0));
    assert_eq!(log.metadata.beta, Some(-0.1));
}

#[test]
fn exit_codes() {
    assert_eq!(bench(&["solve", "--game", "3x3", "--algo", "momwu", "--eta", "0", "--iters", "5"]).status.code(), Some(2));
    assert_eq!(bench(&["solve", "--game", "nim", "--algo", "momwu", "--iters", "5"]).status.code(), Some(2));
    assert_eq!(bench(&["preset", "--name", "table9/kuhn/cfr"]).status.code(), Some(2));
    assert_eq!(bench(&["check", "--theorem", "1", "--beta", "-0.9"]).status.code(), Some(2));
    assert_eq!(bench(&["frobnicate"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = blocker.join("sub").join("x.csv");
    let r = bench(&["solve", "--game", "3x3", "--algo", "rm", "--iters", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn checks_report_json() {
    let r = bench(&["check", "--theorem", "1"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let report: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(report["passed"], true);
    let r = bench(&["check", "--theorem", "3", "--beta", "0"]);
    assert!(r.status.success());
    let report: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(report["applicable"], false);
    let r = bench(&["check", "--theorem", "3", "--iters", "20"]);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn sweep_writes_one_file_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let r = bench(&[
        "sweep", "--param", "k", "--values", "1,5,10,50,100", "--preset", "table2/kuhn/dmogda", "--iters", "30",
        "--out-dir", dir.path().to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let mut names: Vec<String> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names, ["kuhn_dmogda_k1.csv", "kuhn_dmogda_k10.csv", "kuhn_dmogda_k100.csv", "kuhn_dmogda_k5.csv", "kuhn_dmogda_k50.csv"]);
    let text = std::fs::read_to_string(dir.path().join("kuhn_dmogda_k50.csv")).unwrap();
    assert!(text.contains("# k=50\n"));
}

#[test]
fn preset_listing_and_single_run() {
    let r = bench(&["preset", "--list"]);
    let listing = String::from_utf8(r.stdout).unwrap();
    assert!(listing.lines().any(|l| l == "table1/3x3/morm+"));
    assert!(!listing.contains("goofspiel5"));
    let dir = tempfile::tempdir().unwrap();
    let r = bench(&["preset", "--name", "table1/3x3/omwu", "--out-dir", dir.path().to_str().unwrap()]);
    assert!(r.status.success());
    assert!(dir.path().join("table1_3x3_omwu.csv").exists());
}
