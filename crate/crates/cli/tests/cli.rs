use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qdecide_cli::{format_rational, parse_rational, Report};

fn qdecide(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdecide")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn robust_sentence_is_true() {
    let o = qdecide(&["solve", "exists x in [-1,1] . sin(x) = 0"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("TRUE\n"));
}

#[test]
fn false_sentence_exits_zero() {
    let o = qdecide(&["solve", "--certificate", "exists x in [0,1] . x - 2 = 0"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("FALSE\n"));
    assert!(out.contains("separation: 1/1"));
}

#[test]
fn tangency_is_unknown() {
    let o = qdecide(&["solve", "--budget", "5", "--trace", "exists x in [1,2] . sin(x) = 1"]);
    assert_eq!(o.status.code(), Some(2));
    let out = stdout(&o);
    assert!(out.starts_with("UNKNOWN\n"));
    assert!(out.contains("trace: {T,F} {T,F} {T,F} {T,F} {T,F}"));
    assert_eq!(out.matches("degrees=[").count(), 5);
}

#[test]
fn malformed_input_is_an_error() {
    let o = qdecide(&["solve", "exists x in [0,1] x = 0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    let o = qdecide(&["solve", "exists x in [0,1], y in [0,1] . x - y = 0"]);
    assert_eq!(o.status.code(), Some(1));
    let o = qdecide(&["solve", "--epsilon", "0", "exists x in [0,1] . x = 0"]);
    assert_eq!(o.status.code(), Some(1));
    let o = qdecide(&["solve", "--budget", "0", "exists x in [0,1] . x = 0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn json_rationals_round_trip() {
    let o = qdecide(&["solve", "--format", "json", "--certificate", "--epsilon", "0.5", "exists x in [-1,1] . sin(x) = 0"]);
    assert_eq!(o.status.code(), Some(0));
    let report: Report = serde_json::from_str(&stdout(&o)).expect("valid json");
    assert_eq!(report.outcome, "TRUE");
    assert_eq!(report.final_epsilon, "1/2");
    let cert = report.certificate.as_ref().expect("certificate requested");
    assert_eq!(cert.kind, "margin");
    for s in [&cert.value, &report.final_epsilon, &report.trace[0].epsilon] {
        let q = parse_rational(s).expect("num/den");
        assert_eq!(&format_rational(&q), s);
    }
    let again: Report = serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
    assert_eq!(again, report);
}

#[test]
fn output_is_deterministic() {
    let args = ["solve", "--trace", "--certificate", "forall x in [0,1] . exists y in [-2,2] . y^3 - x = 0"];
    let a = qdecide(&args);
    let b = qdecide(&args);
    let one = qdecide(&[&args[..1], &["--workers", "1"], &args[1..]].concat());
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(stdout(&a), stdout(&one));
}

#[test]
fn formula_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.qd");
    fs::write(&path, "# a comment\nexists x in [0,2] . x^2 - 2 = 0\n").unwrap();
    let o = qdecide(&["solve", "--file", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("TRUE"));
    let o = qdecide(&["solve", "--file", dir.path().join("missing.qd").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

fn entry(dir: &Path, name: &str, formula: &str, expect: Option<&str>) {
    fs::write(dir.join(format!("{name}.qd")), formula).unwrap();
    if let Some(e) = expect {
        fs::write(dir.join(format!("{name}.expect")), format!("EXPECT {e}\n")).unwrap();
    }
}

#[test]
fn corpus_statuses() {
    let dir = tempfile::tempdir().unwrap();
    entry(dir.path(), "a", "exists x in [-1,1] . sin(x) = 0", Some("TRUE"));
    entry(dir.path(), "b", "exists x in [1,2] . sin(x) = 1", Some("UNKNOWN@5"));
    entry(dir.path(), "c", "exists x in [0,1] . x - 2 = 0", Some("FALSE"));
    let o = qdecide(&["corpus", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("3/3 passed"));

    entry(dir.path(), "d", "exists x in [1,2] . sin(x) = 1", Some("TRUE"));
    let o = qdecide(&["corpus", "--budget", "3", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(4));

    entry(dir.path(), "e", "exists x in [0,1] . x - 2 = 0", Some("TRUE"));
    let o = qdecide(&["corpus", "--budget", "3", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("VIOLATION"));

    entry(dir.path(), "f", "exists x in [0,1] . x = 0", None);
    let o = qdecide(&["corpus", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing sidecar"));
}

#[test]
fn shipped_corpus_is_labeled() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let entries = qdecide_cli::corpus_entries(&dir).unwrap();
    assert!(entries.len() >= 15);
}
