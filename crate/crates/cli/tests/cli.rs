use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn uc_lab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uc-lab"))
        .args(args)
        .current_dir(dir)
        .env_remove("UC_LAB_THREADS")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("cfg.json");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL: &str = r#"{"mesh_size": 0.06, "three_balls": {"family": {"random_fields": 6}}}"#;

#[test]
fn invalid_json_exits_2_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "{ not json");
    let out = uc_lab(&["three-balls", "--config", &cfg, "--out", "res"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    assert!(!dir.path().join("res").exists());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn unknown_keys_and_bad_geometry_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"meshsize": 0.1}"#);
    assert_eq!(uc_lab(&["mesh", "--config", &cfg, "--out", "a"], dir.path()).status.code(), Some(2));
    let cfg = write_config(dir.path(), r#"{"interface": {"kind": "flat", "params": {"y0": 3}}}"#);
    assert_eq!(uc_lab(&["mesh", "--config", &cfg, "--out", "b"], dir.path()).status.code(), Some(2));
    assert!(!dir.path().join("a").exists() && !dir.path().join("b").exists());
}

#[test]
fn ill_posed_cauchy_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"mesh_size": 0.08, "cauchy": {"alpha": 0.0, "etas": [1e-3]}}"#);
    let out = uc_lab(&["cauchy", "--config", &cfg, "--out", "res"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("res").exists());
}

#[test]
fn three_balls_table_header_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = uc_lab(&["three-balls", "--config", &cfg, "--out", "results/tb", "--seed", "7"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let res = dir.path().join("results/tb");
    let table = fs::read_to_string(res.join("table.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("tag,N1,N2,N3,eps,C,delta,slack,regime"));
    assert_eq!(table.lines().count(), 1 + 5 + 6);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(res.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["schema_version"], 1);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(res.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["violations"], 0);
}

#[test]
fn fixed_seed_reproduces_table_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    for (out, seed) in [("a", "3"), ("b", "3"), ("c", "4")] {
        let o = uc_lab(&["three-balls", "--config", &cfg, "--out", out, "--seed", seed, "--threads", "2"], dir.path());
        assert!(o.status.success());
    }
    let read = |d: &str| fs::read(dir.path().join(d).join("table.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
}

#[test]
fn rerun_replaces_previous_results_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"chain": {"r1": 0.02}}"#);
    assert!(uc_lab(&["chain", "--config", &cfg, "--out", "res"], dir.path()).status.success());
    assert!(uc_lab(&["chain", "--config", &cfg, "--out", "res"], dir.path()).status.success());
    let table = fs::read_to_string(dir.path().join("res/table.csv")).unwrap();
    assert!(table.starts_with("index,x,y\n0,"));
    fs::create_dir(dir.path().join("mine")).unwrap();
    fs::write(dir.path().join("mine/data.txt"), "x").unwrap();
    assert_eq!(uc_lab(&["chain", "--config", &cfg, "--out", "mine"], dir.path()).status.code(), Some(2));
    assert!(dir.path().join("mine/data.txt").exists());
}

#[test]
fn thread_env_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_uc-lab"))
        .args(["mesh", "--out", "res", "--threads", "2"])
        .current_dir(dir.path())
        .env("UC_LAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_uc-lab"))
        .args(["mesh", "--out", "res"])
        .current_dir(dir.path())
        .env("UC_LAB_THREADS", "1")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("res/mesh.txt").exists());
}
