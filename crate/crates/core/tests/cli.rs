use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use quasispec::io::{read_band_table, CsvTable};

fn run(dir: &Path, config: &str, args: &[&str]) -> (Output, PathBuf) {
    let cfg = dir.join("config.json");
    fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let output = Command::new(env!("CARGO_BIN_EXE_quasispec"))
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(args)
        .output()
        .unwrap();
    (output, out)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn reruns_are_byte_identical() {
    let config = r#"{"command": "bands", "preset": "sin2d-schrodinger",
        "problem": {"theta": {"rational": [3, 2]}},
        "discretization": {"alpha_count": 16, "points_per_unit": 20, "window": [0, 20]}}"#;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (o1, out1) = run(a.path(), config, &["--threads", "1"]);
    let (o2, out2) = run(b.path(), config, &[]);
    assert!(o1.status.success(), "{}", String::from_utf8_lossy(&o1.stderr));
    assert!(o2.status.success());
    assert_eq!(files(&out1), files(&out2));
}

#[test]
fn rational_theta_bands_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"command": "bands", "preset": "sin2d-schrodinger",
        "problem": {"theta": {"rational": [3, 2]}},
        "discretization": {"alpha_count": 16, "points_per_unit": 20, "window": [0, 20]}}"#;
    let (o, out) = run(dir.path(), config, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = CsvTable::read(&out.join("bands_q2.csv")).unwrap();
    let (alphas, bands) = read_band_table(&table).unwrap();
    assert_eq!(alphas.len(), 16);
    assert!(bands.iter().all(|row| row.windows(2).all(|w| w[0] <= w[1])));
    let meta = read_json(&out.join("meta.json"));
    assert_eq!(meta["command"], "bands");
    assert_eq!(meta["settings"]["points_per_unit"], 20);
    let gaps = read_json(&out.join("gaps_q2.json"));
    assert!(gaps.is_object() || gaps.is_array());
}

#[test]
fn defaults_are_recorded_in_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run(
        dir.path(),
        r#"{"command": "tiling-info", "preset": "golden-laminate"}"#,
        &["--override", "generations=[1,2,3]"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let meta = read_json(&out.join("meta.json"));
    assert!(meta["defaults"].is_object());
    let tiling = read_json(&out.join("tiling.json"));
    assert!(tiling.to_string().contains("\"ab\""));
}

#[test]
fn homogeneous_laminate_has_no_super_band_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{"command": "trace-scan", "preset": "golden-laminate",
        "problem": {"tiles": {"a": {"length": 1.0, "value": 1.0}, "b": {"length": 0.5, "value": 1.0}}}}"#;
    let (o, out) = run(dir.path(), config, &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read_json(&out.join("gaps.json")), Value::Array(Vec::new()));
    let scan = CsvTable::read(&out.join("scan.csv")).unwrap();
    assert_eq!(scan.rows.len(), 2000);
}

#[test]
fn golden_laminate_scan_certifies_gaps() {
    let dir = tempfile::tempdir().unwrap();
    let (o, out) = run(
        dir.path(),
        r#"{"command": "trace-scan", "preset": "golden-laminate"}"#,
        &[],
    );
    assert!(o.status.success());
    let gaps = read_json(&out.join("gaps.json"));
    assert!(!gaps.as_array().unwrap().is_empty());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let (o, _) = run(dir.path(), r#"{"command": "bands", "bogus": 1}"#, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("error[Config]"));

    let (o, _) = run(
        dir.path(),
        r#"{"command": "bands", "preset": "sin2d-schrodinger", "problem": {"theta": "golden"}, "discretization": {"levels": [4]}}"#,
        &[],
    );
    assert_eq!(o.status.code(), Some(2));

    let (o, _) = run(dir.path(), "not json", &[]);
    assert_eq!(o.status.code(), Some(2));

    let missing = Command::new(env!("CARGO_BIN_EXE_quasispec"))
        .args(["--config", "/nonexistent/config.json"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));

    let (o, _) = run(
        dir.path(),
        r#"{"command": "superspace", "preset": "sin2d-schrodinger", "discretization": {"h": 0.2}}"#,
        &[],
    );
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("MeshTooCoarse"));
}
