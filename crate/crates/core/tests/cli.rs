use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_seplab"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> (i32, String) {
    let out = bin().args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn rd_writes_report_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("rd.json");
    let (code, err) = run(&["rd", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("rd.json")).unwrap()).unwrap();
    assert_eq!(report["command"], "rd");
    assert_eq!(report["passed"], true);
    let csv = std::fs::read_to_string(dir.path().join("rd.csv")).unwrap();
    let row = csv.lines().find(|l| l.starts_with("0.1,")).unwrap();
    let rate: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((rate - 0.531004).abs() < 1e-6);
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = configs().join("simulate.json");
    for (dir, threads) in [(&a, "1"), (&b, "4")] {
        let (code, err) = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--threads", threads]);
        assert_eq!(code, 0, "{err}");
    }
    for f in ["simulate.json", "simulate.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn seed_flag_overrides_config() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = configs().join("simulate.json");
    run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", a.path().to_str().unwrap()]);
    run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", b.path().to_str().unwrap(), "--seed", "8"]);
    let ra = std::fs::read_to_string(a.path().join("simulate.csv")).unwrap();
    let rb = std::fs::read_to_string(b.path().join("simulate.csv")).unwrap();
    assert_ne!(ra, rb);
}

#[test]
fn schema_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"source": ["1/2", "1/2"], "distortion": "hamming", "grid": [0.1], "extra": 1}"#);
    assert_eq!(run(&["rd", "--config", &bad, "--out", out]).0, 2);
    let wrong = write(dir.path(), "wrong.json", r#"{"command": "capacity", "source": ["1/2", "1/2"], "distortion": "hamming", "grid": [0.1]}"#);
    assert_eq!(run(&["rd", "--config", &wrong, "--out", out]).0, 2);
    let garbage = write(dir.path(), "garbage.json", "{not json");
    assert_eq!(run(&["rd", "--config", &garbage, "--out", out]).0, 2);
    assert_eq!(run(&["rd", "--out", out]).0, 2);
}

#[test]
fn injected_fault_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "v.json", r#"{"only": [12], "inject_fault": "mismatched_codebook_law"}"#);
    let (code, err) = run(&["verify-all", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 3, "{err}");
    assert!(err.contains("[FAIL] 12"), "{err}");
}

#[test]
fn zero_budget_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("simulate.json");
    assert_eq!(run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--budget", "0"]).0, 4);
}

#[test]
fn verify_subset_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "v.json", r#"{"only": [1, 3, 10, 11]}"#);
    let (code, err) = run(&["verify-all", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(err.lines().filter(|l| l.starts_with("[PASS]")).count(), 4, "{err}");
}
