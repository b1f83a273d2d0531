//! Per-round timing of the policies at matched settings.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::env::{run_trial, ArmMode, BanditEnv};
use crate::error::{Error, Result};
use crate::estimators::{configure_params, LambdaMode};
use crate::glm::GlmFamily;
use crate::policies::{build_policy, POLICY_NAMES};

pub const BENCH_TIMING_FILE: &str = "bench_timing.csv";
pub const BENCH_SUMMARY_FILE: &str = "bench_summary.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub policies: Vec<String>,
    pub family: GlmFamily,
    pub d: usize,
    pub k: usize,
    pub s: f64,
    pub delta: f64,
    /// Horizon for every policy; when unset GLM-UCB runs 5000 rounds and the
    /// others 10000.
    pub horizon: Option<usize>,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            policies: vec!["glb-omd".into(), "glm-ucb".into()],
            family: GlmFamily::logistic(),
            d: 3,
            k: 20,
            s: 3.0,
            delta: 0.01,
            horizon: None,
            seed: 0,
        }
    }
}

impl BenchConfig {
    pub fn horizon_for(&self, policy: &str) -> usize {
        self.horizon
            .unwrap_or(if policy == "glm-ucb" { 5000 } else { 10_000 })
    }
}

/// Rounds `[start, end)` (1-based) of the early and late timing windows.
/// For `T >= 2200` these are `[100, 1100)` and `[T - 1000, T]`.
pub fn timing_windows(horizon: usize) -> ((usize, usize), (usize, usize)) {
    let width = (horizon / 5).clamp(1, 1000);
    let start = (horizon / 10).clamp(1, 100);
    ((start, start + width), (horizon + 1 - width, horizon + 1))
}

fn window_mean(times: &[u64], (start, end): (usize, usize)) -> f64 {
    let slice = &times[start - 1..end - 1];
    slice.iter().map(|&t| t as f64).sum::<f64>() / slice.len() as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub policy: String,
    pub horizon: usize,
    /// Select + observe time per round in nanoseconds.
    pub times: Vec<u64>,
    pub early_mean_ns: f64,
    pub late_mean_ns: f64,
}

impl BenchResult {
    /// Late-window mean over early-window mean.
    pub fn ratio(&self) -> f64 {
        self.late_mean_ns / self.early_mean_ns
    }
}

pub fn bench_policy(cfg: &BenchConfig, policy: &str) -> Result<BenchResult> {
    if !POLICY_NAMES.contains(&policy) {
        return Err(Error::Config(format!("unknown policy `{policy}`")));
    }
    let horizon = cfg.horizon_for(policy);
    if horizon < 10 {
        return Err(Error::Config(format!(
            "bench horizon must be at least 10, got {horizon}"
        )));
    }
    let params = configure_params(&cfg.family, cfg.d, cfg.s, cfg.delta, LambdaMode::Practical)?;
    let mut pol = build_policy(policy, cfg.family, cfg.d, params, 1.0)?;
    let mut env = BanditEnv::synthetic(
        cfg.family,
        cfg.d,
        cfg.s,
        cfg.k,
        ArmMode::ResampledPerRound,
        cfg.seed,
    )?;
    let rec = run_trial(pol.as_mut(), &mut env, horizon)?;
    let times = rec.round_times();
    let (early, late) = timing_windows(horizon);
    Ok(BenchResult {
        policy: policy.to_string(),
        horizon,
        early_mean_ns: window_mean(&times, early),
        late_mean_ns: window_mean(&times, late),
        times,
    })
}

pub fn run_bench(cfg: &BenchConfig) -> Result<Vec<BenchResult>> {
    if cfg.policies.is_empty() {
        return Err(Error::Config("at least one policy is required".into()));
    }
    cfg.policies.iter().map(|p| bench_policy(cfg, p)).collect()
}

/// Writes `bench_timing.csv` (`policy,t,round_time_ns`) and
/// `bench_summary.csv` (window means and ratio per policy) into `dir`.
pub fn write_bench(results: &[BenchResult], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let timing = dir.join(BENCH_TIMING_FILE);
    let mut w = BufWriter::new(File::create(&timing)?);
    writeln!(w, "policy,t,round_time_ns")?;
    for r in results {
        for (i, t) in r.times.iter().enumerate() {
            writeln!(w, "{},{},{t}", r.policy, i + 1)?;
        }
    }
    w.flush()?;
    let summary = dir.join(BENCH_SUMMARY_FILE);
    let mut text = String::from("policy,T,early_mean_ns,late_mean_ns,ratio\n");
    for r in results {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            r.policy,
            r.horizon,
            r.early_mean_ns,
            r.late_mean_ns,
            r.ratio()
        ));
    }
    fs::write(&summary, text)?;
    Ok(vec![timing, summary])
}
