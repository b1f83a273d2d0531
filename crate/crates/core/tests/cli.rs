use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use glb_omd::harness::config_from_summary;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_glb-omd"));
    cmd.env_remove("GLB_OMD_SEED");
    cmd
}

fn run_in(out: &Path, extra: &[&str]) -> Output {
    bin()
        .args([
            "run", "--family", "logistic", "--d", "2", "--S", "3", "--T", "80", "--K", "20",
        ])
        .args([
            "--delta",
            "0.01",
            "--trials",
            "3",
            "--lambda-mode",
            "practical",
            "--seed",
            "7",
        ])
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn without_timing(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["--policy", "glb-omd", "--policy", "glm-ucb"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let csv = fs::read_to_string(dir.path().join("glb-omd_logistic_S3.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "trial,t,arm,reward,inst_regret,cum_regret,beta,round_time_ns"
    );
    assert_eq!(lines.count(), 3 * 80);
    assert!(dir.path().join("glm-ucb_logistic_S3.csv").exists());

    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.contains("# seed=7\n"));
    assert!(summary.contains(&format!("# version={}\n", env!("CARGO_PKG_VERSION"))));
    let cfg = config_from_summary(&summary).unwrap();
    assert_eq!(cfg.policies, vec!["glb-omd", "glm-ucb"]);
    assert_eq!((cfg.d, cfg.horizon, cfg.trials, cfg.seed), (2, 80, 3, 7));
    assert!(summary.lines().any(|l| l.starts_with("glm-ucb,3,0,")));
}

#[test]
fn zero_trials_is_a_usage_error() {
    let out = bin().args(["run", "--trials", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["run", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["run", "--delta", "2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn replay_is_identical_modulo_timing() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run_in(a.path(), &["--jobs", "1"]).status.success());
    assert!(run_in(b.path(), &["--jobs", "3"]).status.success());
    let name = "glb-omd_logistic_S3.csv";
    let ca = fs::read_to_string(a.path().join(name)).unwrap();
    let cb = fs::read_to_string(b.path().join(name)).unwrap();
    assert_eq!(without_timing(&ca), without_timing(&cb));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("exp.cfg");
    let out_dir = dir.path().join("res");
    fs::write(
        &cfg_path,
        format!("T=40\nK=5\ntrials=2\nseed=5\nout={}\n", out_dir.display()),
    )
    .unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg_path)
        .args(["--K", "6"])
        .env("GLB_OMD_SEED", "99")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    let cfg = config_from_summary(&summary).unwrap();
    assert_eq!((cfg.horizon, cfg.k, cfg.trials, cfg.seed), (40, 6, 2, 5));

    // Round trip: the echoed configuration reproduces the run.
    let echoed = dir.path().join("echo.cfg");
    fs::write(
        &echoed,
        cfg.to_kv_text().replace(
            &out_dir.display().to_string(),
            &dir.path().join("res2").display().to_string(),
        ),
    )
    .unwrap();
    let out = bin()
        .args(["run", "--config"])
        .arg(&echoed)
        .output()
        .unwrap();
    assert!(out.status.success());
    let name = "glb-omd_logistic_S3.csv";
    let first = fs::read_to_string(out_dir.join(name)).unwrap();
    let second = fs::read_to_string(dir.path().join("res2").join(name)).unwrap();
    assert_eq!(without_timing(&first), without_timing(&second));
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "--T", "10", "--trials", "1", "--out"])
        .arg(dir.path())
        .env("GLB_OMD_SEED", "123")
        .output()
        .unwrap();
    assert!(out.status.success());
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.contains("# seed=123\n"));
}

#[test]
fn arm_file_run() {
    let dir = tempfile::tempdir().unwrap();
    let arms = dir.path().join("arms.txt");
    fs::write(
        &arms,
        "# toy arms\nd=2 K=3 has_means=1\n2 0 0.2\n0 2 0.9\n1 1 0.5\n",
    )
    .unwrap();
    let out = bin()
        .args([
            "run",
            "--d",
            "2",
            "--T",
            "50",
            "--trials",
            "2",
            "--arm-file",
        ])
        .arg(&arms)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "d=2 K=2 has_means=0\n1 0\n1 oops\n").unwrap();
    let out = bin()
        .args(["run", "--d", "2", "--arm-file"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn verify_small_suites() {
    let out = bin()
        .args([
            "verify",
            "--suite",
            "projection",
            "--suite",
            "sherman-morrison",
            "--cases",
            "50",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS projection"));
    assert!(stdout.contains("PASS sherman-morrison"));

    let out = bin()
        .args([
            "verify", "--suite", "coverage", "--trials", "5", "--T", "60",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("coverage 1.000"));

    let out = bin()
        .args(["verify", "--suite", "nothing"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_single_policy() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["bench", "--policies", "glb-omd", "--T", "300", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let timing = fs::read_to_string(dir.path().join("bench_timing.csv")).unwrap();
    assert_eq!(timing.lines().next().unwrap(), "policy,t,round_time_ns");
    assert_eq!(timing.lines().count(), 301);
    assert!(timing.lines().skip(1).all(|l| l.starts_with("glb-omd,")));
    assert!(String::from_utf8_lossy(&out.stdout).contains("ratio"));
}
