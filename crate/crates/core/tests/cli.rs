use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_twofold-lab"))
}

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const P1: &str = r#""params": {"b": 1.0, "beta": 1.0, "c": 4.0, "gamma": 1.0}"#;
const GEOM: &str = r#""geometry": {"delta": 0.5, "nu": 0.1, "zeta_w": 0.02, "i_in": [-1.0, -0.5],
    "r_out": {"x": [0.5, 3.5], "z": [-0.5, 1.5]}, "varsigma": 0.1}"#;

#[test]
fn validate_accepts_shipped_configs() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        let out = bin().arg("validate").arg(&path).output().unwrap();
        let expected = if name.starts_with("invalid") { 2 } else { 0 };
        assert_eq!(out.status.code(), Some(expected), "{name}: {}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn validate_reports_findings() {
    let out = bin().arg("validate").arg(configs().join("invalid-degenerate.json")).output().unwrap();
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let f = report["findings"].as_array().unwrap();
    assert_eq!(f.len(), 1);
    assert!(f[0].as_str().unwrap().contains("discriminant = 0"));
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.json", r#"{"scenario": "no-such-thing"}"#);
    assert_eq!(bin().arg("run").arg(&cfg).output().unwrap().status.code(), Some(2));
    assert_eq!(bin().arg("validate").arg(&cfg).output().unwrap().status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(bin().arg("validate").arg(&missing).output().unwrap().status.code(), Some(2));
}

#[test]
fn run_writes_summary_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "vt.json",
        &format!(r#"{{"scenario": "vartheta-check", {P1}, "vartheta": {{"nx": 10, "nz": 10}}}}"#),
    );
    let out_dir = dir.path().join("out");
    let out = bin().args(["run", "--jobs", "2", "--out"]).arg(&out_dir).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["scenario"], "vartheta-check");
    assert_eq!(summary["results"]["n_points"], 100);
    assert!(summary["results"]["max_error"].as_f64().unwrap() <= 1e-8);
    assert!(summary["errors"].as_array().unwrap().is_empty());
    let csv = std::fs::read_to_string(out_dir.join("first_return.csv")).unwrap();
    assert!(csv.starts_with("t,x,y,z,event\n"));
    assert!(csv.trim_end().ends_with("section_0"));
    assert!(out_dir.join("first_return_xz.svg").exists());
}

#[test]
fn numerical_failure_exits_3_and_keeps_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "lm.json",
        &format!(
            r#"{{"scenario": "local-map-sweep", {P1}, "epsilons": [1e-2], {GEOM},
            "grid": {{"ny": 2, "nz": 2}}, "solver": {{"max_steps": 20}}}}"#
        ),
    );
    let out_dir = dir.path().join("out");
    let out = bin().arg("run").arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    let errors = summary["errors"].as_array().unwrap();
    assert!(!errors.is_empty());
    assert_eq!(errors[0]["code"], "MaxStepsExceeded");
    assert!(out_dir.join("local_map.csv").exists());
}

#[test]
fn summary_is_byte_identical_across_runs_and_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "lm.json",
        &format!(r#"{{"scenario": "local-map-sweep", {P1}, "epsilons": [1e-2, 1e-3], {GEOM}, "grid": {{"ny": 2, "nz": 3}}}}"#),
    );
    let mut texts = Vec::new();
    for (k, jobs) in ["1", "4"].iter().enumerate() {
        let out_dir = dir.path().join(format!("out{k}"));
        let out = bin().args(["run", "--jobs", jobs, "--out"]).arg(&out_dir).arg(&cfg).output().unwrap();
        assert_eq!(out.status.code(), Some(0));
        texts.push(std::fs::read(out_dir.join("summary.json")).unwrap());
    }
    assert_eq!(texts[0], texts[1]);
}

#[test]
fn log_level_is_read_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "cr.json", &format!(r#"{{"scenario": "chart-roundtrip", {P1}, "draws": 10}}"#));
    let out = bin()
        .env("TWOFOLD_LAB_LOG", "info")
        .args(["run", "--out"])
        .arg(dir.path().join("out"))
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("running ChartRoundtrip"));
    let quiet = bin().args(["run", "--out"]).arg(dir.path().join("out2")).arg(&cfg).output().unwrap();
    assert!(quiet.stderr.is_empty());
}
