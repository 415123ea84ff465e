//! Black-box checks of the compiled binary: exit codes, file outputs,
//! and determinism under different worker counts.

use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mictree"))
}

#[test]
fn verify_theory_reduced_scope_passes() {
    let out = bin()
        .args([
            "verify-theory",
            "--cases",
            "6",
            "--max-k",
            "2",
            "--max-l",
            "2",
            "--max-m",
            "2",
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("PASS conjunction k=1"));
    assert!(stdout.contains("PASS two-term l=2 m=2"));
    assert!(stdout.contains("VERIFIED"));
}

#[test]
fn verify_theory_writes_report_when_asked() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["verify-theory", "--cases", "4", "--max-k", "2", "--max-l", "1", "--max-m", "1"])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(report["cases"].as_array().unwrap().len() >= 3);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "verify-theory");
    assert_eq!(manifest["rng"], "chacha8");
}

#[test]
fn malformed_config_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{ \"term_sizes\": [2,").unwrap();
    let outdir = dir.path().join("results");
    let out = bin()
        .arg("finite-sample")
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&outdir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!outdir.exists(), "failed run must not leave output files");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("parse config"), "stderr: {stderr}");
}

#[test]
fn unknown_flag_exits_2() {
    let out = bin()
        .args(["mic-sweep", "--no-such-flag"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn opt_table_uniform_has_expected_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "opt-table",
            "--family",
            "uniform",
            "--max-terms",
            "2",
            "--max-term-size",
            "3",
            "--t-max",
            "8",
        ])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(dir.path().join("opt_table.csv")).unwrap();
    assert!(csv.starts_with("signature,t,opt_error\n"));
    // A single variable is resolved by one split; the two-term {2,3}
    // target is solved exactly at t = 8.
    assert!(csv.contains("\n1,0,5.0000000000000000e-1\n"));
    assert!(csv.contains("\n1,1,0.0000000000000000e0\n"));
    assert!(csv.contains("\n2+3,8,0.0000000000000000e0\n"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "opt-table");
    assert_eq!(manifest["config"]["t_max"], 8);
}

#[test]
fn trace_emits_csv_and_tree() {
    let dir = tempfile::tempdir().unwrap();
    let dnf = dir.path().join("f.json");
    fs::write(&dnf, r#"{"n": 5, "terms": [[0, 1], [2, 3, 4]]}"#).unwrap();
    let dist = dir.path().join("d.json");
    fs::write(&dist, r#"{"uniform": 5}"#).unwrap();
    let outdir = dir.path().join("run");
    let out = bin()
        .args(["trace", "--policy", "bestfirst", "--t-max", "5"])
        .arg("--dnf")
        .arg(&dnf)
        .arg("--dist")
        .arg(&dist)
        .arg("--out")
        .arg(&outdir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = fs::read_to_string(outdir.join("trace.csv")).unwrap();
    assert!(csv.starts_with("t,internal_nodes,error,leaf_order,feature\n"));
    assert_eq!(csv.lines().count(), 6, "header plus five splits");
    let tree: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(outdir.join("tree.json")).unwrap()).unwrap();
    assert!(tree.get("feature").is_some(), "root should be a split node");
}

#[test]
fn sweep_output_independent_of_workers() {
    let run = |workers: &str| {
        let dir = tempfile::tempdir().unwrap();
        let out = bin()
            .args([
                "mic-sweep",
                "--max-terms",
                "3",
                "--max-term-size",
                "3",
                "--t-star",
                "12",
                "--workers",
                workers,
            ])
            .arg("--out")
            .arg(dir.path())
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        let hist = fs::read_to_string(dir.path().join("histogram.json")).unwrap();
        (csv, hist)
    };
    let (csv1, hist1) = run("1");
    let (csv4, hist4) = run("4");
    assert_eq!(csv1, csv4);
    assert_eq!(hist1, hist4);
    // 19 signatures with at most 3 terms of size at most 3.
    assert_eq!(csv1.lines().count(), 20);
    assert!(csv1.starts_with("signature,policy,tie_mode,t_star,mic_mean\n"));
}

#[test]
fn finite_sample_smoke_config_runs() {
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/finite_smoke.json");
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["finite-sample", "--config", cfg])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let results = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert!(results.starts_with("policy,train_size,repeat,seed,test_error,tree_internal_nodes\n"));
    assert_eq!(results.lines().count(), 5, "2 policies x 2 sizes x 1 repeat");
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.starts_with("policy,train_size,mean_test_error,std_test_error\n"));
    assert_eq!(summary.lines().count(), 5);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["command"], "finite-sample");
    assert_eq!(manifest["config"]["seed"], 11);
}
