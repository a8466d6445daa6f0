use std::path::Path;
use std::process::{Command, Output};

fn tomteach(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tomteach")).args(args).env("RUST_LOG", "warn").output().expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn lines(p: &Path) -> usize {
    std::fs::read_to_string(p).unwrap().lines().count()
}

#[test]
fn toy_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let out = tomteach(&["toy", "--trials", "10", "--seed", "3", "--out", dir.path().to_str().unwrap()]);
    let stdout = ok(&out);
    assert!(stdout.contains("aligned_tom"));
    // header + 4 classes × 10 trials × 5 teachers
    assert_eq!(lines(&dir.path().join("toy.csv")), 1 + 4 * 10 * 5);
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let out = tomteach(&["run", "--trials", "1", "--seed", "5", "--out", run_dir.to_str().unwrap()]);
    assert!(ok(&out).contains("omniscient"));
    let raw = run_dir.join("raw.csv");
    // header + 12 trials × 7 teachers
    assert_eq!(lines(&raw), 1 + 12 * 7);

    let report_dir = dir.path().join("report");
    ok(&tomteach(&["report", "--raw", raw.to_str().unwrap(), "--out", report_dir.to_str().unwrap()]));
    assert_eq!(
        std::fs::read_to_string(report_dir.join("summary.csv")).unwrap(),
        std::fs::read_to_string(run_dir.join("summary.csv")).unwrap()
    );
}

#[test]
fn replay_dumps_audit_json() {
    let out = tomteach(&["replay", "--trials", "1", "--seed", "5", "--trial", "4", "--obs-regime", "first:10"]);
    let stdout = ok(&out);
    assert!(stdout.contains("\"decisions\""));
    assert!(stdout.contains("\"visible_actions\""));
}

#[test]
fn rejects_bad_arguments() {
    assert!(!tomteach(&["run", "--obs-regime", "sometimes"]).status.success());
    assert!(!tomteach(&["replay", "--trials", "1", "--trial", "99"]).status.success());
    assert!(!tomteach(&["run", "--alpha", "-1", "--trials", "1"]).status.success());
}
