//! End-to-end checks of the command-line surface: subcommands, flag/file
//! precedence, the seed environment variable, and exit codes.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rlc-ekf"))
}

fn temp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rlc_cli_{}_{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn simulate_then_ingest_roundtrip() {
    let dir = temp_dir("simulate");
    let out = bin()
        .args(["simulate", "--runs", "2", "--seed", "9"])
        .arg("--out-dir")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("episode_0.csv").exists());
    assert!(dir.join("episode_1.csv").exists());

    let out = bin().arg("ingest").arg(dir.join("episode_1.csv")).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("100.0 Hz"), "{text}");
    assert!(text.contains("ground truth:  present"), "{text}");
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn evaluate_writes_reports_and_is_seed_deterministic() {
    let dir_a = temp_dir("eval_a");
    let dir_b = temp_dir("eval_b");
    let dir_c = temp_dir("eval_c");
    let run = |dir: &Path, seed: &str| {
        let out = bin()
            .args(["evaluate", "--scenario", "1", "--filters", "ekf", "--runs", "2"])
            .arg("--out-dir")
            .arg(dir)
            .env("RLC_EKF_SEED", seed)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read_to_string(dir.join("rmse.csv")).unwrap()
    };
    let a = run(&dir_a, "7");
    let b = run(&dir_b, "7");
    let c = run(&dir_c, "8");
    assert_eq!(a, b, "same seed must reproduce the report");
    assert_ne!(a, c, "different seeds must differ");
    assert!(dir_a.join("report.csv").exists());
    assert!(dir_a.join("runs/run_1.csv").exists());
    assert!(dir_a.join("plot_report.py").exists());
    for d in [dir_a, dir_b, dir_c] {
        std::fs::remove_dir_all(d).ok();
    }
}

#[test]
fn flags_override_config_file() {
    let dir = temp_dir("precedence");
    let config_path = dir.join("config.json");
    std::fs::write(
        &config_path,
        r#"{"scenario": "1", "filters": ["ekf"], "runs": 5, "seed": 3, "duration_s": 2.0}"#,
    )
    .unwrap();
    let out = bin()
        .args(["evaluate", "--runs", "1"])
        .arg("--config")
        .arg(&config_path)
        .arg("--out-dir")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("runs/run_0.csv").exists());
    assert!(!dir.join("runs/run_1.csv").exists(), "flag --runs 1 must win over the file");
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn exit_codes_distinguish_failure_classes() {
    // Configuration error -> 1.
    let out = bin().args(["evaluate", "--scenario", "bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));

    // Requesting the compensated filter without a policy -> 1.
    let out = bin()
        .args(["evaluate", "--scenario", "1", "--filters", "rlc-ekf", "--runs", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // Data errors -> 2.
    let out = bin().args(["ingest", "does_not_exist.csv"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));

    let dir = temp_dir("badcsv");
    let bad = dir.join("bad.csv");
    std::fs::write(&bad, "t,gyro_x\n0,0\n").unwrap();
    let out = bin().arg("ingest").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("missing required columns"), "{msg}");
    std::fs::remove_dir_all(dir).ok();

    // Bad environment seed -> 1.
    let out = bin()
        .args(["evaluate", "--scenario", "1", "--filters", "ekf", "--runs", "1"])
        .env("RLC_EKF_SEED", "not_a_number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn real_data_pipeline_on_simulated_log() {
    // A simulated export stands in for a recorded log: train on its first
    // half through random windows, then evaluate the real scenario on the
    // second half.
    let dir = temp_dir("realpath");
    let out = bin()
        .args(["simulate", "--runs", "1", "--seed", "31"])
        .arg("--out-dir")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    let log = dir.join("episode_0.csv");

    let config_path = dir.join("train.json");
    std::fs::write(
        &config_path,
        r#"{
            "window_len": 300,
            "training": {
                "phases": 3, "episodes_per_phase": 2, "grad_steps_per_phase": 10,
                "behavior_freeze_phases": 1, "batch_size": 64, "policy_count": 1,
                "validation_episodes": 2, "actor_warmup_steps": 5
            }
        }"#,
    )
    .unwrap();
    let out = bin()
        .args(["train", "--seed", "6"])
        .arg("--config")
        .arg(&config_path)
        .arg("--dataset")
        .arg(&log)
        .arg("--out-dir")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let policy = dir.join("policy.rlc");
    assert!(policy.exists());

    let out = bin()
        .args(["evaluate", "--scenario", "real", "--filters", "ekf,cf,rlc-ekf", "--runs", "2", "--seed", "1"])
        .arg("--policy")
        .arg(&policy)
        .arg("--dataset")
        .arg(&log)
        .arg("--out-dir")
        .arg(dir.join("eval"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rmse = std::fs::read_to_string(dir.join("eval/rmse.csv")).unwrap();
    assert!(rmse.contains("RLC-EKF"), "{rmse}");
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn train_subcommand_small_budget() {
    let dir = temp_dir("train");
    let config_path = dir.join("train.json");
    std::fs::write(
        &config_path,
        r#"{
            "duration_s": 4.0,
            "training": {
                "phases": 3, "episodes_per_phase": 2, "grad_steps_per_phase": 10,
                "behavior_freeze_phases": 1, "batch_size": 64, "policy_count": 2,
                "validation_episodes": 2, "actor_warmup_steps": 5
            }
        }"#,
    )
    .unwrap();
    let out = bin()
        .args(["train", "--seed", "5"])
        .arg("--config")
        .arg(&config_path)
        .arg("--out-dir")
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let policy_path = dir.join("policy.rlc");
    assert!(policy_path.exists());
    assert!(dir.join("training_log.csv").exists());
    assert!(dir.join("selection.csv").exists());

    // The saved policy loads and drives an evaluation run.
    let out = bin()
        .args(["evaluate", "--scenario", "1", "--filters", "ekf,rlc-ekf", "--runs", "1", "--seed", "2"])
        .arg("--policy")
        .arg(&policy_path)
        .arg("--out-dir")
        .arg(dir.join("eval"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::remove_dir_all(dir).ok();
}
