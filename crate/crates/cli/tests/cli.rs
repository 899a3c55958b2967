use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nsbandit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsbandit"))
        .args(args)
        .env_remove("NSBANDIT_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(str::to_owned).collect()
}

#[test]
fn run_writes_both_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = nsbandit(&[
        "run",
        "--env",
        "fast",
        "--policies",
        "ts,dts,dots,dyn-ts,rexp3",
        "--horizon",
        "50",
        "--runs",
        "3",
        "--seed",
        "42",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let regret = data_lines(&dir.path().join("regret.csv"));
    assert_eq!(regret.len(), 5 * 50);
    let rewards = fs::read_to_string(dir.path().join("rewards.csv")).unwrap();
    assert!(rewards.starts_with("policy,t,mean_inst_reward\n"));
    let s = stdout(&o);
    for label in ["TS", "dTS", "dOTS", "DynamicTS", "REXP3"] {
        assert!(s.lines().any(|l| l.starts_with(label)), "{label} missing from\n{s}");
    }
}

#[test]
fn abrupt_defaults_use_reference_tuning() {
    let dir = tempfile::tempdir().unwrap();
    let o =
        nsbandit(&["run", "--env", "abrupt", "--horizon", "20", "--runs", "2", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("gamma=0.6 alpha0=1 beta0=1"), "{s}");
    assert!(s.contains("C=25"), "{s}");
    assert!(s.contains("delta=25 gamma=0.5"), "{s}");
}

#[test]
fn seed_fixes_output_bytes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, jobs) in [(&a, "1"), (&b, "3")] {
        let o = nsbandit(&[
            "--jobs",
            jobs,
            "run",
            "--env",
            "slow",
            "--policies",
            "dts,exp3ix,swucb",
            "--horizon",
            "100",
            "--runs",
            "8",
            "--seed",
            "5",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["regret.csv", "rewards.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
    }
}

#[test]
fn unknown_policy_lists_valid_names() {
    let o = nsbandit(&["run", "--env", "fast", "--policies", "ts,ucb9"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("dyn-ts"), "{}", stderr(&o));
}

#[test]
fn missing_config_fails() {
    let o = nsbandit(&["run", "--config", "/nonexistent/exp.cfg"]);
    assert!(!o.status.success());
    let o = nsbandit(&["run"]);
    assert!(!o.status.success());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    fs::write(&cfg, "env = abrupt\nhorizon = 30\nruns = 2\nout = res\n\n[policy]\npolicy = dts\ngamma = 0.9\n")
        .unwrap();
    let o = nsbandit(&["run", "--config", cfg.to_str().unwrap(), "--horizon", "12"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("gamma=0.9"));
    assert_eq!(data_lines(&dir.path().join("res/regret.csv")).len(), 12);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_nsbandit"))
        .args(["run", "--env", "fast", "--policies", "ts", "--horizon", "5", "--runs", "1"])
        .env("NSBANDIT_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("regret.csv").exists());
}

#[test]
fn gamma_sweep_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = nsbandit(&[
        "sweep",
        "gamma",
        "--env",
        "abrupt",
        "--grid",
        "0.1:1.0:0.05",
        "--horizon",
        "20",
        "--runs",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert!(text.starts_with("param,policy,terminal_norm_regret,stderr\n"));
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 19 * 2);
    assert_eq!(rows.iter().filter(|r| r.contains(",dTS,")).count(), 19);
}

#[test]
fn arms_sweep_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = nsbandit(&[
        "sweep",
        "arms",
        "--env",
        "slow",
        "--grid",
        "2,4,8,16,32",
        "--horizon",
        "10",
        "--runs",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = data_lines(&dir.path().join("sweep.csv"));
    assert_eq!(rows.iter().filter(|r| r.contains(",REXP3,")).count(), 5);
    assert_eq!(rows.len(), 5 * 5);
}

#[test]
fn bad_grids_are_usage_errors() {
    for grid in ["0", "", "0.5:0.1:0.1", "1.5"] {
        let o = nsbandit(&["sweep", "gamma", "--env", "abrupt", "--grid", grid]);
        assert_eq!(o.status.code(), Some(2), "grid {grid:?}: {}", stderr(&o));
    }
}

#[test]
fn prob_closed_forms() {
    let o = nsbandit(&["prob", "2", "1", "1", "1"]);
    assert!(o.status.success());
    let s = stdout(&o);
    let p: f64 = s.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((p - 1.0 / 3.0).abs() < 1e-12, "{s}");

    let o = nsbandit(&["prob", "3", "3", "3", "3", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["probability"].as_f64().unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn prob_with_monte_carlo_and_warning() {
    let o = nsbandit(&["prob", "1", "0.4", "1", "0.4", "--mc", "1000000", "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let diff = v["mc"]["abs_diff"].as_f64().unwrap();
    let se = v["mc"]["stderr"].as_f64().unwrap();
    assert!(diff < 4.0 * se, "{diff} vs {se}");
    assert!(!v["warnings"].as_array().unwrap().is_empty());
    assert!(stderr(&o).contains("warning"));
}

#[test]
fn prob_rejects_bad_shapes() {
    let o = nsbandit(&["prob", "0", "1", "1", "1"]);
    assert!(!o.status.success());
}

#[test]
fn envs_catalogue() {
    let o = nsbandit(&["envs"]);
    assert!(o.status.success());
    let s = stdout(&o);
    for name in ["fast", "slow", "abrupt"] {
        assert!(s.lines().any(|l| l.starts_with(name)), "{s}");
    }
    for v in ["0.10", "0.37", "0.63", "0.90"] {
        assert!(s.contains(v), "{s}");
    }

    let o = nsbandit(&["envs", "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
}
