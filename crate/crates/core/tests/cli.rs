//! The `calcspec` binary: stdout contract and exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

mod support;

fn calcspec(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_calcspec"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn fixture_dir() -> TempDir {
    let dir = TempDir::new().unwrap();
    support::copy_fixtures(dir.path());
    dir
}

#[test]
fn schema_command_reproduces_stored_schema() {
    let dir = fixture_dir();
    let o = calcspec(dir.path(), &["schema", "withdrawal_charge.wbk.json", "--root", "Main"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), fs::read_to_string(dir.path().join("wc.schema.csv")).unwrap());

    let o = calcspec(dir.path(), &["schema", "surrender.wbk.json", "--root", "Surrender", "-o", "sv.csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read(dir.path().join("sv.csv")).unwrap(), fs::read(dir.path().join("sv.schema.csv")).unwrap());

    let o = calcspec(dir.path(), &["schema", "withdrawal_charge.wbk.json", "--root", "Nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_exit_codes_follow_the_worst_verdict() {
    let dir = fixture_dir();
    let base = ["validate", "--workbook", "withdrawal_charge.wbk.json", "--schema", "wc.schema.csv"];
    let with = |extra: &[&str]| {
        let args: Vec<&str> = base.iter().chain(extra).copied().collect();
        calcspec(dir.path(), &args)
    };

    let o = with(&["--bindings", "wc.bindings.json", "--policy", "P001", "--policy", "P002"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "P001 PASSED\nP002 PASSED\n");

    let o = with(&["--bindings", "wc.faulty.bindings.json", "--policy", "P002", "--policy", "P003"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "P002 PASSED\nP003 FAILED (1 mismatch)\n");
    let html = fs::read_to_string(dir.path().join("out/wc.wbk$Main/P003.html")).unwrap();
    assert_eq!(html.matches("class=\"mismatch\"").count(), 1);

    let o = with(&["--bindings", "wc.faulty.bindings.json", "--policy", "P003", "--policy", "P999"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout(&o), "P003 FAILED (1 mismatch)\nP999 ERROR\n");

    let o = with(&["--bindings", "missing.json", "--policy", "P001"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).is_empty());
}

#[test]
fn batch_and_report_agree() {
    let dir = fixture_dir();
    let o = calcspec(dir.path(), &["batch", "--manifest", "manifest.json", "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let lines: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 20);
    assert_eq!(lines[0], "sv.wbk$Surrender P001 PASSED");
    assert!(lines.iter().all(|l| l.ends_with(" PASSED")));
    let summary = fs::read_to_string(dir.path().join("out/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 21);

    let o = calcspec(dir.path(), &["report", "--runs", "out", "--out", "out/report.html"]);
    assert_eq!(o.status.code(), Some(0));
    let report = fs::read_to_string(dir.path().join("out/report.html")).unwrap();
    let dashboard = fs::read_to_string(dir.path().join("out/dashboard.html")).unwrap();
    assert_eq!(report, dashboard);

    let o = calcspec(dir.path(), &["batch", "--manifest", "manifest.json", "--jobs", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_two() {
    let dir = fixture_dir();
    assert_eq!(calcspec(dir.path(), &[]).status.code(), Some(2));
    assert_eq!(calcspec(dir.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(calcspec(dir.path(), &["--version"]).status.code(), Some(0));
}
