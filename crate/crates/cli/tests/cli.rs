use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_graph-liouville"));
    c.env_remove("GRAPH_LIOUVILLE_BUDGET");
    c
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str], out: &Path) -> (Output, Value) {
    let output = bin().args(args).arg("--out").arg(out).output().unwrap();
    let text = std::fs::read_to_string(out.join("report.json")).unwrap();
    (output, serde_json::from_str(&text).unwrap())
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn lattice_hypotheses_hold_in_the_critical_case() {
    let dir = tempfile::tempdir().unwrap();
    let (out, report) = run(
        &["check-hypotheses", "--family", "lattice", "--dim", "3", "--sigma", "3", "--alpha", "1", "--radii", "8,16,32,64"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report["result"]["theorem_applies"], Value::Bool(true));
    assert_eq!(report["config"]["radii"], serde_json::json!([8.0, 16.0, 32.0, 64.0]));
    assert_eq!(report["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(header(&dir.path().join("growth.csv")), "R,W,ratio,slope_so_far");
}

#[test]
fn lattice_tuning_reports_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let (out, report) = run(&["tune", "--family", "lattice", "--dim", "3", "--sigma", "4", "--radius", "50"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let sol = &report["result"]["solution"];
    assert!(sol["delta"].as_f64().unwrap() > 0.0);
    assert!(sol["K"].as_f64().unwrap() > 0.0);
    assert_eq!(report["result"]["scan"]["pass"], Value::Bool(true));
}

#[test]
fn subcritical_verification_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let (out, report) = run(
        &["verify-supersolution", "--family", "lattice", "--dim", "3", "--sigma", "2.5", "--delta", "0.1", "--shift", "10"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report["status"], "rejected");
    let reason = report["result"]["rejected"].as_str().unwrap();
    assert!(reason.contains("N/(N-2)"), "{reason}");
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["certificate", "--family", "homogeneous", "--sigma", "2", "--epsilon", "0.5", "--n0", "2", "--delta", "0.25", "--radii", "10,20,40"];
    // Same output path so the embedded config matches too.
    let shared = a.path().join("run");
    run(&args, &shared);
    let first = std::fs::read(shared.join("report.json")).unwrap();
    std::fs::rename(&shared, b.path().join("first")).unwrap();
    run(&args, &shared);
    assert_eq!(first, std::fs::read(shared.join("report.json")).unwrap());
    assert_eq!(
        header(&shared.join("certificate.csv")),
        "R,LHS,annulus_mass,hoelder_bound,C_hat,tail_mass"
    );
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(shared.join("metadata.json")).unwrap()).unwrap();
    assert!(meta["started_unix"].as_f64().unwrap() > 0.0);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"family":"factorial","sigma":3,"alpha":1,"radii":[8,16,32,64]}"#).unwrap();
    let out_dir = dir.path().join("out");
    let (out, report) = run(&["volume-growth", "--config", cfg.to_str().unwrap(), "--sigma", "4"], &out_dir);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report["config"]["sigma"], 4.0);
    assert_eq!(report["config"]["family"], "factorial");
}

#[test]
fn unknown_config_keys_fail() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"family":"lattice","sigam":3}"#).unwrap();
    let (out, report) = run(&["tune", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(1));
    assert!(report["error"].as_str().unwrap().contains("sigam"));
}

#[test]
fn validation_lists_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    let (out, report) = run(
        &["check-hypotheses", "--family", "lattice", "--dim", "9", "--sigma", "0.5", "--alpha", "2", "--r0", "1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let msg = report["error"].as_str().unwrap();
    for key in ["dim:", "sigma:", "alpha:", "r0:"] {
        assert!(msg.contains(key), "{msg}");
    }
}

#[test]
fn budget_from_environment_makes_checks_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["check-hypotheses", "--family", "lattice", "--dim", "3", "--sigma", "3", "--radii", "8,16,32,64", "--out"])
        .arg(dir.path())
        .env("GRAPH_LIOUVILLE_BUDGET", "1000")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "inconclusive");
    assert_eq!(report["config"]["budget"], 1000);
}

#[test]
fn shooting_writes_the_profile() {
    let dir = tempfile::tempdir().unwrap();
    let (out, report) = run(
        &["shoot", "--family", "homogeneous", "--sigma", "2", "--epsilon", "0.5", "--n0", "2", "--u0", "1e-6", "--depth", "200", "--bracket", "1e-6,10"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report["result"]["profile"]["stays_positive"], Value::Bool(true));
    assert!(report["result"]["threshold"]["u_star"].as_f64().unwrap() > 1e-6);
    let csv = std::fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("n,u_n,residual"));
    assert_eq!(csv.lines().count(), 1 + 201);
}

#[test]
fn max_principle_on_a_graph_file() {
    let input = fixture("path6.json");
    let base = ["max-principle", "--family", "file", "--input", input.to_str().unwrap(), "--x0", "c", "--radius", "1.5"];
    let dir = tempfile::tempdir().unwrap();
    let table = format!("@{}", fixture("concave.csv").display());
    let (out, report) = run(&[&base[..], &["--u", &table]].concat(), &dir.path().join("ok"));
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report["result"]["verdict"], "strictly-positive");
    assert_eq!(report["result"]["checked"], 3);

    let table = format!("@{}", fixture("planted_zero.csv").display());
    let (out, report) = run(&[&base[..], &["--u", &table]].concat(), &dir.path().join("zero"));
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(report["result"]["verdict"], "violation");
    assert_eq!(report["result"]["vertex"], "c");
}

#[test]
fn factorial_build_info_volumes() {
    let dir = tempfile::tempdir().unwrap();
    let (out, report) = run(&["build-info", "--family", "factorial", "--depth", "6"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let levels = report["result"]["levels"].as_array().unwrap();
    for (n, row) in levels.iter().enumerate() {
        assert_eq!(row["volume"].as_f64().unwrap(), (2 * n + 1) as f64);
    }
}

#[test]
fn expression_potentials_are_checked() {
    let dir = tempfile::tempdir().unwrap();
    let (out, report) = run(
        &["volume-growth", "--family", "lattice", "--dim", "2", "--sigma", "3", "--v", "1 + y", "--radii", "4,8,16,32"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(report["error"].as_str().unwrap().contains("unknown variables"));
    let (out, _) = run(
        &["volume-growth", "--family", "lattice", "--dim", "2", "--sigma", "3", "--v", "1 + r2", "--radii", "4,8,16,32"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
}
