use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const SIMULATE: &str =
    "experiment = simulate\nn = 4\ndt = 1e-3\nT = 0.05\nseed = 11\nreplicates = 2\nmodel = linear_cut_log\n";

fn loghe(args: &[&str], env_seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_loghe"));
    cmd.args(args).env_remove("LOGHE_SEED");
    if let Some(s) = env_seed {
        cmd.env("LOGHE_SEED", s);
    }
    cmd.output().unwrap()
}

fn write_cfg(dir: &Path, text: &str) -> String {
    let p = dir.join("run.cfg");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn summary(out: &Path) -> Value {
    serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn simulate_writes_outputs_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), &format!("{SIMULATE}trajectory = true\n"));
    let out = dir.path().join("out");
    let o = loghe(
        &["simulate", "--config", &cfg, "--out", out.to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("PASS no_explosion"));
    assert!(out.join("cases.csv").exists());
    assert_eq!(summary(&out)["passed"], true);
    let trajectories = fs::read_dir(&out)
        .unwrap()
        .filter(|e| {
            e.as_ref()
                .unwrap()
                .file_name()
                .to_string_lossy()
                .starts_with("trajectory_")
        })
        .count();
    assert_eq!(trajectories, 2);
}

#[test]
fn seed_precedence_is_flag_then_env_then_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SIMULATE);
    let seed_of = |args: &[&str], env: Option<&str>| {
        let out = dir.path().join("o");
        let mut all = vec![
            "simulate",
            "--config",
            cfg.as_str(),
            "--out",
            out.to_str().unwrap(),
        ];
        all.extend_from_slice(args);
        let o = loghe(&all, env);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        summary(&out)["spec"]["seed"].as_u64().unwrap()
    };
    assert_eq!(seed_of(&[], None), 11);
    assert_eq!(seed_of(&[], Some("22")), 22);
    assert_eq!(seed_of(&["--seed", "33"], Some("22")), 33);
    assert_eq!(seed_of(&["--seed", "33"], Some("not a number")), 33);
}

#[test]
fn bad_env_seed_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), SIMULATE);
    let o = loghe(
        &[
            "simulate",
            "--config",
            &cfg,
            "--out",
            dir.path().join("o").to_str().unwrap(),
        ],
        Some("x"),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("LOGHE_SEED"));
}

#[test]
fn failed_assertions_exit_one_unless_report_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        dir.path(),
        "experiment = verify\nseed = 1\nreplicates = 5\ndebug_rhs_scale = 0\n",
    );
    let out = dir.path().join("o");
    let o = loghe(
        &["verify", "--config", &cfg, "--out", out.to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL "));
    assert_eq!(summary(&out)["passed"], false);
    let o = loghe(
        &[
            "verify",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--no-assert",
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn config_problems_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let cfg = write_cfg(dir.path(), "experiment = simulate\nn = 4\ndt = 1e-3\nbogus = 1\n");
    let o = loghe(
        &["simulate", "--config", &cfg, "--out", out.to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));

    let cfg = write_cfg(dir.path(), SIMULATE);
    let o = loghe(
        &["verify", "--config", &cfg, "--out", out.to_str().unwrap()],
        None,
    );
    assert_eq!(o.status.code(), Some(2));

    let missing = dir.path().join("missing.cfg");
    let o = loghe(&["simulate", "--config", missing.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn shipped_schedule_config_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/schedule.cfg");
    let out = dir.path().join("o");
    let o = loghe(
        &[
            "schedule",
            "--config",
            cfg,
            "--out",
            out.to_str().unwrap(),
            "--workers",
            "1",
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
}
