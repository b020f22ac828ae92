use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn pdlab(dir: &Path, args: &[&str]) -> i32 {
    let out = Command::new(env!("CARGO_BIN_EXE_pdlab"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs");
    out.status.code().expect("exit code")
}

fn write_config(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

#[test]
fn approx_dump_writes_special_chain() {
    let dir = tempfile::tempdir().unwrap();
    let code = pdlab(
        dir.path(),
        &[
            "approx-dump",
            "--p",
            "5",
            "--delta",
            "1",
            "--A1",
            "2",
            "--out",
            "chain.json",
        ],
    );
    assert_eq!(code, 0);
    let doc: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("chain.json")).unwrap()).unwrap();
    let stages = doc["chain"]["stages"].as_array().unwrap();
    let q: Vec<f64> = stages.iter().map(|s| s["q"].as_f64().unwrap()).collect();
    assert_eq!(q, vec![3.0, 2.0]);
    assert!(doc["tool_version"].as_str().unwrap().starts_with("pdlab "));
    let chain: pdlab::approx::ApproxChain = serde_json::from_value(doc["chain"].clone()).unwrap();
    assert_eq!(chain.thresholds(), vec![2.0, 3.0]);
}

#[test]
fn verify_is_deterministic_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    write_config(
        dir.path(),
        "c.json",
        r#"{"p": [1.5, 5], "delta": 1, "sampler": {"count": 500}, "checks": ["eq_E", "stitch", "hammer_R1_Q0", "UAm"]}"#,
    );
    let a = pdlab(
        dir.path(),
        &[
            "verify",
            "--config",
            "c.json",
            "--seed",
            "42",
            "--out",
            "a",
            "--threads",
            "1",
        ],
    );
    let b = pdlab(
        dir.path(),
        &[
            "verify",
            "--config",
            "c.json",
            "--seed",
            "42",
            "--out",
            "b",
            "--threads",
            "3",
        ],
    );
    assert_eq!((a, b), (0, 0));
    let ra = fs::read(dir.path().join("a/verify_report.json")).unwrap();
    let rb = fs::read(dir.path().join("b/verify_report.json")).unwrap();
    assert_eq!(ra, rb);
    let doc: Value = serde_json::from_slice(&ra).unwrap();
    assert_eq!(doc["config"]["seed"], 42);
    // UAm does not apply to p = 1.5 and is reported as skipped.
    let skipped = doc["reports"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|r| r["skipped"] == true)
        .count();
    assert_eq!(skipped, 1);
}

#[test]
fn gap_violation_and_bad_config_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    write_config(
        dir.path(),
        "gap.json",
        r#"{"p": 7, "delta": 1, "chain": {"q": [4.5, 2], "A": [20, 21]}}"#,
    );
    assert_eq!(pdlab(dir.path(), &["verify", "--config", "gap.json", "--out", "v"]), 2);
    write_config(
        dir.path(),
        "gap_solve.json",
        r#"{"p": 7, "delta": 1, "chain": {"q": [4.5, 2], "A": [20, 21]}, "grid": {"n": 8}, "time": {"T": 0.1, "tau": 0.05}}"#,
    );
    assert_eq!(
        pdlab(dir.path(), &["solve", "--config", "gap_solve.json", "--out", "s"]),
        2
    );
    write_config(dir.path(), "unknown.json", r#"{"p": 3, "delta": 1, "colour": "red"}"#);
    assert_eq!(
        pdlab(
            dir.path(),
            &["approx-dump", "--config", "unknown.json", "--out", "x.json"]
        ),
        2
    );
    assert_eq!(pdlab(dir.path(), &["approx-dump", "--out", "x.json"]), 2);
}

#[test]
fn solve_outputs_embed_version_and_config() {
    let dir = tempfile::tempdir().unwrap();
    write_config(
        dir.path(),
        "s.json",
        r#"{"p": 3, "delta": 1, "grid": {"n": 8}, "time": {"T": 0.1, "tau": 0.05}, "forcing": {"kind": "sine", "amplitude": 5}}"#,
    );
    assert_eq!(
        pdlab(
            dir.path(),
            &["solve", "--config", "s.json", "--out", "o", "--trajectory"]
        ),
        0
    );
    let meta: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("o/solve.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["grid"]["n"], 8);
    assert_eq!(meta["diagnostics"].as_array().unwrap().len(), 3);
    assert_eq!(meta["trajectory"]["shape"], serde_json::json!([3, 8, 8, 2]));
    let bin = fs::read(dir.path().join("o/trajectory.bin")).unwrap();
    assert_eq!(bin.len(), 3 * 8 * 8 * 2 * 8);
    let csv = fs::read_to_string(dir.path().join("o/diagnostics.csv")).unwrap();
    assert!(csv.starts_with("# pdlab "));
    assert!(csv.contains("step,time,l2_sq,F_l2_sq,gradu_l2_sq,dt_accum,gradF_accum,newton_iters"));
    assert_eq!(pdlab(dir.path(), &["steady", "--config", "s.json", "--out", "o"]), 0);
    assert!(dir.path().join("o/steady.json").exists());
}

#[test]
fn sweep_writes_one_row_per_entry() {
    let dir = tempfile::tempdir().unwrap();
    write_config(
        dir.path(),
        "p5.json",
        r#"{"p": 5, "delta": 1, "grid": {"n": 8}, "time": {"T": 0.1, "tau": 0.05}, "forcing": {"kind": "sine", "amplitude": 500}}"#,
    );
    assert_eq!(
        pdlab(
            dir.path(),
            &["sweep", "--config", "p5.json", "--A-schedule", "2,4,8,16", "--out", "w"]
        ),
        0
    );
    let csv = fs::read_to_string(dir.path().join("w/sweep.csv")).unwrap();
    let rows = csv.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 5);
    let doc: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("w/sweep.json")).unwrap()).unwrap();
    assert!(doc["last_two_relative_change"]["gradF_accum"].is_number());
    assert_eq!(
        pdlab(
            dir.path(),
            &["sweep", "--config", "p5.json", "--A-schedule", "4,2", "--out", "w"]
        ),
        2
    );
}
