//! Contract tests for the rotlab binary: artifact layout, exit codes,
//! seed and worker handling, and reproducibility of data.csv.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rotlab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rotlab"))
        .args(args)
        .current_dir(dir)
        .env_remove("ROTLAB_WORKERS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

const ROTSET_RIGID: &str = r#"
experiment = "rotset"
output_dir = "out"
seed = 42

[map]
kind = "rigid"
rho = 0.3

[params]
n_samples = 32
max_iter = 1000
"#;

#[test]
fn run_writes_all_three_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", ROTSET_RIGID);
    let out = rotlab(&["run", &cfg], tmp.path());
    assert_eq!(exit_code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let dir = tmp.path().join("out");
    let result: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("result.json")).unwrap()).unwrap();
    assert!((result["mean"].as_f64().unwrap() - 0.3).abs() < 1e-6);
    assert_eq!(result["total"].as_u64().unwrap(), 32);

    let csv = fs::read_to_string(dir.join("data.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "index,x0,u0,value,converged");
    assert_eq!(lines.count(), 32);

    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["experiment"], "rotset");
    assert_eq!(meta["seed"].as_u64().unwrap(), 42);
    assert!(meta["workers"].as_u64().unwrap() >= 1);
    assert!(meta["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert!(meta["versions"]["rotlab-core"].is_string());
    assert_eq!(meta["config"]["map"]["kind"], "rigid");
}

#[test]
fn failed_run_exits_3_and_records_the_error() {
    // Rigid rotation by 1/2: the second image of the vertical line
    // lands back on the line, so the translation picture must fail
    // with a disjointness error, not a crash.
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        r#"
experiment = "line-verify"
output_dir = "out"

[map]
kind = "rigid"
rho = 0.5

[params]
n = 2
rho = 0.5
"#,
    );
    let out = rotlab(&["run", &cfg], tmp.path());
    assert_eq!(exit_code(&out), 3);

    let dir = tmp.path().join("out");
    let result: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("result.json")).unwrap()).unwrap();
    assert_eq!(result["error"]["exit_code"].as_i64().unwrap(), 3);
    assert!(result["error"]["message"].as_str().unwrap().contains("disjoint"));

    // meta.json is still written and data.csv still has its header.
    assert!(dir.join("meta.json").exists());
    let csv = fs::read_to_string(dir.join("data.csv")).unwrap();
    assert_eq!(csv, "index,offset,position\n");
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();

    // Missing [map].
    let cfg = write_config(
        tmp.path(),
        "missing_map.toml",
        "experiment = \"rotset\"\noutput_dir = \"out\"\n",
    );
    let out = rotlab(&["run", &cfg], tmp.path());
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("[map]"));

    // Unknown key is rejected at parse time.
    let cfg = write_config(
        tmp.path(),
        "typo.toml",
        "experiment = \"rotset\"\noutput_dir = \"out\"\nbananas = 1\n",
    );
    assert_eq!(exit_code(&rotlab(&["run", &cfg], tmp.path())), 2);

    // Unknown experiment name.
    let cfg = write_config(
        tmp.path(),
        "unknown.toml",
        "experiment = \"frobnicate\"\noutput_dir = \"out\"\n",
    );
    assert_eq!(exit_code(&rotlab(&["run", &cfg], tmp.path())), 2);

    // Nonexistent config path.
    assert_eq!(exit_code(&rotlab(&["run", "no_such.toml"], tmp.path())), 2);
}

#[test]
fn numerical_failures_exit_3() {
    // 1/2 sits inside [0.49, 0.52], so no Farey interval with small
    // denominators encloses it.
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        r#"
experiment = "farey"
output_dir = "out"

[params]
lo = 0.49
hi = 0.52
max_den = 100
"#,
    );
    let out = rotlab(&["run", &cfg], tmp.path());
    assert_eq!(exit_code(&out), 3);
    let result: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(tmp.path().join("out/result.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(result["error"]["exit_code"].as_i64().unwrap(), 3);
}

#[test]
fn farey_success_reports_the_interval() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        r#"
experiment = "farey"
output_dir = "out"

[params]
lo = 0.41
hi = 0.42
max_den = 10
"#,
    );
    let out = rotlab(&["run", &cfg], tmp.path());
    assert_eq!(exit_code(&out), 0);
    let result: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(tmp.path().join("out/result.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(result["left"], "2/5");
    assert_eq!(result["right"], "3/7");
    let csv = fs::read_to_string(tmp.path().join("out/data.csv")).unwrap();
    assert!(csv.starts_with("num,den,value\n"));
}

#[test]
fn validate_checks_without_running() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "good.toml", ROTSET_RIGID);
    let out = rotlab(&["validate", &cfg], tmp.path());
    assert_eq!(exit_code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok: rotset"));
    assert!(!tmp.path().join("out").exists(), "validate must not write artifacts");

    // Missing required parameter for line-verify.
    let cfg = write_config(
        tmp.path(),
        "bad.toml",
        r#"
experiment = "line-verify"
output_dir = "out"

[map]
kind = "rigid"
rho = 0.3
"#,
    );
    let out = rotlab(&["validate", &cfg], tmp.path());
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("params.n"));
}

#[test]
fn seed_override_beats_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", ROTSET_RIGID);
    let read_csv = || fs::read_to_string(tmp.path().join("out/data.csv")).unwrap();

    assert_eq!(exit_code(&rotlab(&["run", &cfg], tmp.path())), 0);
    let with_config_seed = read_csv();
    assert_eq!(exit_code(&rotlab(&["run", &cfg, "--seed", "7"], tmp.path())), 0);
    let with_flag_seed = read_csv();
    assert_ne!(with_config_seed, with_flag_seed, "seed must change the samples");

    assert_eq!(exit_code(&rotlab(&["run", &cfg, "--seed", "7"], tmp.path())), 0);
    assert_eq!(read_csv(), with_flag_seed, "same seed must reproduce bytes");
}

#[test]
fn rerun_reproduces_data_csv_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        r#"
experiment = "sweep"
output_dir = "out"
seed = 9

[map]
kind = "rigid"
rho = 0.41421356237309515

[params]
theta_min = -0.01
theta_max = 0.01
theta_steps = 11
n_samples = 8
max_iter = 200
max_den = 8
"#,
    );
    assert_eq!(exit_code(&rotlab(&["run", &cfg], tmp.path())), 0);
    let first = fs::read_to_string(tmp.path().join("out/data.csv")).unwrap();
    assert_eq!(first.lines().count(), 12, "header plus one row per theta");
    assert!(first.lines().nth(1).unwrap().ends_with(",0.000000"));

    assert_eq!(exit_code(&rotlab(&["run", &cfg], tmp.path())), 0);
    assert_eq!(fs::read_to_string(tmp.path().join("out/data.csv")).unwrap(), first);
}

#[test]
fn workers_env_var_is_a_fallback() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", ROTSET_RIGID);
    let out = Command::new(env!("CARGO_BIN_EXE_rotlab"))
        .args(["run", &cfg])
        .current_dir(tmp.path())
        .env("ROTLAB_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code().unwrap(), 0);
    let meta: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(tmp.path().join("out/meta.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(meta["workers"].as_u64().unwrap(), 2);

    // The --workers flag wins over the environment.
    let out = Command::new(env!("CARGO_BIN_EXE_rotlab"))
        .args(["run", &cfg, "--workers", "1"])
        .current_dir(tmp.path())
        .env("ROTLAB_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code().unwrap(), 0);
    let meta: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(tmp.path().join("out/meta.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(meta["workers"].as_u64().unwrap(), 1);
}
