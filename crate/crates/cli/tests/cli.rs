use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pbdr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pbdr"))
        .args(args)
        .env_remove("PBDR_ASSET_DIR")
        .output()
        .expect("binary runs")
}

fn echoed(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("config.json")).unwrap()).unwrap()
}

#[test]
fn run_test_echoes_resolved_defaults_and_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    let o = pbdr(&[
        "run-test",
        "--test",
        "1",
        "--frames",
        "5",
        "--seeds",
        "0",
        "--solver",
        "pbdr",
        "--precision",
        "double",
        "--velocity-update",
        "legacy",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let cfg = echoed(&out);
    let spec = &cfg["resolved"]["specs"][0];
    assert_eq!(spec["mass"], 4.0);
    assert_eq!(spec["mu"], 0.4);
    assert_eq!(spec["force"], 17.0);
    assert_eq!(spec["frames"], 5);
    let solver = &cfg["resolved"]["solvers"][0];
    assert_eq!(solver["precision"], "double");
    assert_eq!(solver["velocity_update"], "legacy");
    assert_eq!(solver["substeps"], 10);

    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
    let traj =
        fs::read_to_string(out.join("trajectory_test1_pbdr-no-velocity-update_seed0.csv")).unwrap();
    assert_eq!(traj.lines().count(), 6);
    assert!(fs::read_to_string(out.join("summary.txt"))
        .unwrap()
        .contains("final position error"));
}

#[test]
fn invalid_values_fail_before_any_output() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bad");
    let o = pbdr(&["run-test", "--mu", "-0.1", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mu"));
    assert!(!out.exists());
}

#[test]
fn config_file_keys_and_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("cfg");
    let path = tmp.path().join("run.json");
    let json = serde_json::json!({
        "command": "pack",
        "pack.shape": "box",
        "spec.n_per_axis": 3,
        "out": out,
    });
    fs::write(&path, json.to_string()).unwrap();
    let o = pbdr(&["--config", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("27 spheres"));
    let csv = fs::read_to_string(out.join("packing.csv")).unwrap();
    assert_eq!(csv.lines().count(), 28);

    fs::write(&path, r#"{"command": "run-test", "spec.friction": 0.2}"#).unwrap();
    let o = pbdr(&["--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("spec.friction"));
}

#[test]
fn echoed_config_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let o = pbdr(&[
        "run-test",
        "--test",
        "2",
        "--frames",
        "20",
        "--seeds",
        "3,4",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let mut cfg = echoed(&first);
    let second = tmp.path().join("second");
    cfg["out"] = Value::from(second.to_str().unwrap());
    let path = tmp.path().join("again.json");
    fs::write(&path, cfg.to_string()).unwrap();
    let o = pbdr(&["--config", path.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in [
        "trajectory_test2_pbd_seed3.csv",
        "trajectory_test2_pbdr_seed4.csv",
    ] {
        assert_eq!(
            fs::read_to_string(first.join(name)).unwrap(),
            fs::read_to_string(second.join(name)).unwrap()
        );
    }
}

#[test]
fn mesh_found_through_asset_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("mesh");
    let assets = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/assets");
    let o = Command::new(env!("CARGO_BIN_EXE_pbdr"))
        .args([
            "pack",
            "--shape",
            "bunny",
            "--mesh",
            "bunny.obj",
            "--radius",
            "0.01",
            "--out",
        ])
        .arg(&out)
        .env("PBDR_ASSET_DIR", &assets)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("spheres"));

    let o = pbdr(&[
        "pack",
        "--shape",
        "bunny",
        "--mesh",
        "bunny.obj",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("spec.mesh"));
}

#[test]
fn ablate_writes_table_shaped_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ablate");
    let o = pbdr(&[
        "ablate",
        "--frames",
        "30",
        "--seeds",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("ablation.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with('#'));
    assert_eq!(
        lines[1],
        "ablation,metric,t2,t10,mean,ours_t2,ours_t10,ours_mean,ratio"
    );
    assert_eq!(lines.len(), 8);
}

#[test]
fn simulation_errors_are_flagged() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("fail");
    // one sphere per box cannot be spun: the scene is rejected at run time
    let o = pbdr(&[
        "run-test",
        "--test",
        "2",
        "--n-per-axis",
        "1",
        "--frames",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.starts_with("INCOMPLETE"));
    assert!(out.join("config.json").exists());
}
