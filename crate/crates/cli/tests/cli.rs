use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_singular-pq"))
}

fn reference_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.json")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_in(dir: &Path, extra: &[&str]) -> Output {
    let cfg = reference_config();
    let mut args = vec!["--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn window_reports_nonempty() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["window"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let w = json(&dir.path().join("window.json"));
    assert_eq!(w["window"]["nonempty"], Value::Bool(true));
    let lo = w["window"]["lambda_star"].as_f64().unwrap();
    let hi = w["window"]["lambda_upper"].as_f64().unwrap();
    assert!(lo < hi);
}

#[test]
fn solve_is_deterministic_and_distinct() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = run_in(d.path(), &["--nodes", "512", "solve"]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["solve.json", "pairs.json", "pairs.csv", "u1.csv", "u2.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs between runs");
    }
    let s = json(&a.path().join("solve.json"));
    assert_eq!(s["distinctness"]["distinct"], Value::Bool(true));
}

#[test]
fn zero_function_fails_subsolution_check() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("zero.csv");
    let mut text = String::from("r,u\n");
    for i in 0..=64 {
        text.push_str(&format!("{},0\n", i as f64 / 64.0));
    }
    std::fs::write(&input, text).unwrap();
    let out = run_in(
        dir.path(),
        &["certify", "--input", input.to_str().unwrap(), "--kind", "subsolution"],
    );
    assert_eq!(out.status.code(), Some(1));
    let c = json(&dir.path().join("certificate.json"));
    assert_eq!(c["pass"], Value::Bool(false));
    assert_eq!(c["error"], Value::String("positivity_loss".into()));
}

#[test]
fn radial_output_round_trips_through_certify() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["--nodes", "1024", "radial"]);
    assert_eq!(out.status.code(), Some(0));
    let first = json(&dir.path().join("radial_claim.json"))["claim"]["pass"].clone();
    let csv = dir.path().join("radial.csv");
    let out = run_in(
        dir.path(),
        &["certify", "--input", csv.to_str().unwrap(), "--kind", "radial-claim"],
    );
    assert_eq!(out.status.code(), Some(0));
    let again = json(&dir.path().join("certificate.json"));
    assert_eq!(again["pass"], first);
    assert_eq!(again["outcome"]["pass"], first);
}

#[test]
fn ordering_check_between_csv_files() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_in(dir.path(), &["--nodes", "256", "solve"]).status.code(), Some(0));
    let (u1, u2) = (dir.path().join("u1.csv"), dir.path().join("u2.csv"));
    let ordered = run_in(
        dir.path(),
        &["certify", "--input", u1.to_str().unwrap(), "--against", u2.to_str().unwrap(), "--kind", "ordering"],
    );
    assert_eq!(ordered.status.code(), Some(0));
    let reversed = run_in(
        dir.path(),
        &["certify", "--input", u2.to_str().unwrap(), "--against", u1.to_str().unwrap(), "--kind", "ordering"],
    );
    assert_eq!(reversed.status.code(), Some(1));
}

#[test]
fn schema_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let base = std::fs::read_to_string(reference_config()).unwrap();
    for bad in [
        base.replace("\"v1\"", "\"v0\""),
        base.replace("\"seed\": 7", "\"seed\": 7, \"colour\": 1"),
        base.replace("\"gamma\": 0.5", "\"gamma\": 1.5"),
        "{ not json".to_string(),
    ] {
        let path = dir.path().join("bad.json");
        std::fs::write(&path, bad).unwrap();
        let out = run(&["--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "window"]);
        assert_eq!(out.status.code(), Some(2));
    }
    let missing = run(&["--config", "/nonexistent/cfg.json", "window"]);
    assert_eq!(missing.status.code(), Some(2));
    let out = run_in(dir.path(), &["--lambda", "sideways", "window"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn lambda_outside_window_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["--lambda", "1.0", "radial"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("outside window"));
}
