//! Black-box tests of the `avf` binary: corpus verification, exit-code
//! contract, determinism, and a few single-shot subcommands.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn avf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_avf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 output")
}

fn write(dir: &Path, name: &str, body: &str) {
    std::fs::write(dir.join(name), body).unwrap();
}

#[test]
fn verify_shipped_corpus_matches_everything() {
    let dir = corpus_dir();
    let out = avf(&["verify", dir.to_str().unwrap()]);
    let text = stdout(&out);
    assert_eq!(code(&out), 0, "stdout:\n{text}");
    assert!(text.contains("checks: 56  matched: 56  exit: 0"), "{text}");
    assert!(!text.contains("MISS"), "{text}");
}

#[test]
fn verify_output_is_deterministic_across_runs_and_job_counts() {
    let dir = corpus_dir();
    let d = dir.to_str().unwrap();
    let first = stdout(&avf(&["verify", d]));
    let second = stdout(&avf(&["verify", d]));
    let serial = stdout(&avf(&["verify", d, "--jobs", "1"]));
    let parallel = stdout(&avf(&["verify", d, "--jobs", "4"]));
    assert_eq!(first, second);
    assert_eq!(first, serial);
    assert_eq!(first, parallel);
}

#[test]
fn verify_json_report_is_machine_readable_and_sorted() {
    let dir = corpus_dir();
    let out = avf(&["verify", dir.to_str().unwrap(), "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("valid json");
    assert_eq!(v["checks"], 56);
    assert_eq!(v["matched"], 56);
    assert_eq!(v["exit"], 0);
    let ids: Vec<&str> = v["items"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["id"].as_str().unwrap())
        .collect();
    assert_eq!(ids.len(), 56);
    let mut sorted = ids.clone();
    sorted.sort_unstable();
    assert_eq!(ids, sorted);
}

#[test]
fn filter_selects_checks_by_glob() {
    let dir = corpus_dir();
    let out = avf(&[
        "verify",
        dir.to_str().unwrap(),
        "--filter",
        "s-line-*",
    ]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("checks: 6  matched: 6"), "{}", stdout(&out));
}

const SCRATCH_VARIETY: &str =
    r#"{ "type": "variety", "name": "A1", "vars": ["x"], "relations": [] }"#;
const SCRATCH_FIELD: &str =
    r#"{ "type": "field", "name": "sq", "variety": "A1", "coeffs": { "x": "x^2" } }"#;

#[test]
fn hard_mismatch_beats_inconclusive_in_the_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "variety.json", SCRATCH_VARIETY);
    write(tmp.path(), "field.json", SCRATCH_FIELD);
    // x is no first integral of x^2 d/dx: a definitive failure against pass
    write(
        tmp.path(),
        "check-bad.json",
        r#"{ "type": "check", "id": "bad", "expect": "pass",
             "check": "first-integral", "field": "sq", "element": "x" }"#,
    );
    // x^2 d/dx is not locally nilpotent; the bounded search is inconclusive
    write(
        tmp.path(),
        "check-soft.json",
        r#"{ "type": "check", "id": "soft", "expect": "pass",
             "check": "lnd-certify", "field": "sq", "degrees": [0], "bound": 8 }"#,
    );
    let out = avf(&["verify", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 1, "{}", stdout(&out));

    std::fs::remove_file(tmp.path().join("check-bad.json")).unwrap();
    let out = avf(&["verify", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2, "{}", stdout(&out));
}

#[test]
fn malformed_documents_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    write(tmp.path(), "broken.json", "{ not json");
    let out = avf(&["verify", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(!stdout(&avf(&["verify", tmp.path().to_str().unwrap()])).contains("checks:"));
}

#[test]
fn empty_directory_verifies_trivially() {
    let tmp = tempfile::tempdir().unwrap();
    let out = avf(&["verify", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("checks: 0  matched: 0"));
}

#[test]
fn single_shot_commands_resolve_corpus_names() {
    let dir = corpus_dir();
    let env = dir.to_str().unwrap();

    let out = avf(&["div", "s-nu1", "--form", "s-torus", "--env", env]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).trim(), "div = 0");

    let out = avf(&["tangent", "s-printed-third", "--env", env]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("x^2 - y^2 - x + y"));

    let out = avf(&[
        "flow", "s-nu1", "--lambda", "5/4", "--at", "s-b", "--env", env,
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("x = 3/4") && text.contains("y = 1/10") && text.contains("z = 2"));

    let out = avf(&["parse", "(1-x-y)/(x*y)", "--vars", "x,y"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).trim(), "(-x - y + 1)/(x*y)");
}

#[test]
fn field_documents_can_be_passed_by_path() {
    let dir = corpus_dir();
    let field = dir.join("field-s-nu1.json");
    let form = dir.join("form-s-torus.json");
    let out = avf(&[
        "div",
        field.to_str().unwrap(),
        "--form",
        form.to_str().unwrap(),
        "--env",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).trim(), "div = 0");
}

#[test]
fn bounded_searches_report_inconclusive_as_exit_2() {
    let dir = corpus_dir();
    let env = dir.to_str().unwrap();
    // x1 and x1*x2 share the zero of x1; no certificate at any degree
    let out = avf(&["unit-cert", "x1", "x1*x2", "--variety", "A2", "--env", env]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).contains("inconclusive"));
}
