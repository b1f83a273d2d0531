//! Multi-trial, multi-policy experiment runs.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::ExperimentConfig;
use crate::env::{load_arm_file, run_trial, write_run_csv, ArmSet, BanditEnv, RunRecord};
use crate::error::{Error, Result};
use crate::estimators::configure_params;
use crate::glm::GlmFamily;
use crate::policies::build_policy;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const SUMMARY_HEADER: &str = "policy,trials,failed,final_regret_mean,final_regret_std,mean_round_time_ns,kappa_analytic,kappa_empirical,kappa_star,fit_warnings";

/// Seed of trial `index`. Every policy faces the same environment in a given
/// trial.
pub fn trial_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add(index as u64)
}

#[derive(Debug, Clone)]
pub struct PolicyOutcome {
    pub policy: String,
    /// One entry per trial in trial order; failed trials carry the error text.
    pub trials: Vec<std::result::Result<RunRecord, String>>,
}

impl PolicyOutcome {
    pub fn succeeded(&self) -> impl Iterator<Item = (usize, &RunRecord)> {
        self.trials
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.as_ref().ok().map(|r| (i, r)))
    }

    pub fn failed(&self) -> usize {
        self.trials.iter().filter(|t| t.is_err()).count()
    }

    pub fn final_regrets(&self) -> Vec<f64> {
        self.succeeded().map(|(_, r)| r.final_regret()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub policies: Vec<PolicyOutcome>,
}

impl ExperimentOutcome {
    pub fn all_failed(&self) -> bool {
        self.policies.iter().all(|p| p.failed() == p.trials.len())
    }
}

fn build_env(
    cfg: &ExperimentConfig,
    family: GlmFamily,
    arms: Option<&ArmSet>,
    seed: u64,
) -> Result<BanditEnv> {
    match arms {
        Some(arms) => BanditEnv::from_arms(family, arms.clone(), cfg.s, seed),
        None => BanditEnv::synthetic(family, cfg.d, cfg.s, cfg.k, cfg.arm_mode, seed),
    }
}

fn one_trial(
    cfg: &ExperimentConfig,
    policy: &str,
    family: GlmFamily,
    arms: Option<&ArmSet>,
    index: usize,
) -> Result<RunRecord> {
    let mut env = build_env(cfg, family, arms, trial_seed(cfg.seed, index))?;
    let d = env.dim();
    let params = configure_params(&family, d, cfg.s, cfg.delta, cfg.lambda_mode)?;
    let mut pol = build_policy(policy, family, d, params, cfg.radius_scale)?;
    run_trial(pol.as_mut(), &mut env, cfg.horizon)
}

/// Runs every (policy, trial) pair on a pool of `cfg.jobs` threads. Results
/// are ordered by policy, then trial, regardless of completion order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let family = cfg.glm_family()?;
    let arms = match &cfg.arm_file {
        Some(path) => {
            let arms = load_arm_file(path)?;
            if arms.dim() != cfg.d {
                return Err(Error::Config(format!(
                    "arm file has d={} but the configuration has d={}",
                    arms.dim(),
                    cfg.d
                )));
            }
            Some(arms)
        }
        None => None,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;

    let policies = pool.install(|| {
        cfg.policies
            .iter()
            .map(|name| {
                let trials = (0..cfg.trials)
                    .into_par_iter()
                    .map(|i| {
                        one_trial(cfg, name, family, arms.as_ref(), i).map_err(|e| e.to_string())
                    })
                    .collect();
                PolicyOutcome {
                    policy: name.clone(),
                    trials,
                }
            })
            .collect()
    });
    Ok(ExperimentOutcome {
        config: cfg.clone(),
        policies,
    })
}

/// File name of the per-round CSV of one policy.
pub fn run_csv_name(policy: &str, cfg: &ExperimentConfig) -> String {
    format!("{policy}_{}_S{}.csv", cfg.family, cfg.s)
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// One row of the summary table.
pub fn summary_row(outcome: &PolicyOutcome) -> String {
    let ok: Vec<&RunRecord> = outcome.succeeded().map(|(_, r)| r).collect();
    let (mean, std) = mean_std(&outcome.final_regrets());
    let round_time = mean_std(
        &ok.iter()
            .map(|r| r.summary.wall_time_ns as f64 / r.horizon() as f64)
            .collect::<Vec<_>>(),
    )
    .0;
    let kappa_analytic = ok.first().map_or(f64::NAN, |r| r.summary.kappa_analytic);
    let kappa_empirical = ok
        .iter()
        .map(|r| r.summary.kappa_empirical)
        .fold(f64::NAN, f64::max);
    let kappa_star = mean_std(
        &ok.iter()
            .filter_map(|r| r.kappa_star().ok())
            .collect::<Vec<_>>(),
    )
    .0;
    let warnings: usize = ok.iter().map(|r| r.summary.fit_warnings).sum();
    format!(
        "{},{},{},{mean},{std},{round_time},{kappa_analytic},{kappa_empirical},{kappa_star},{warnings}",
        outcome.policy,
        outcome.trials.len(),
        outcome.failed(),
    )
}

/// Summary text: `# key=value` metadata lines (library version, then the
/// effective configuration), failure notes, then the summary table.
pub fn summary_text(outcome: &ExperimentOutcome) -> String {
    let mut out = format!("# version={}\n", env!("CARGO_PKG_VERSION"));
    for (k, v) in outcome.config.to_kv() {
        out.push_str(&format!("# {k}={v}\n"));
    }
    for p in &outcome.policies {
        for (i, t) in p.trials.iter().enumerate() {
            if let Err(e) = t {
                out.push_str(&format!(
                    "# failed: policy={} trial={i}: {}\n",
                    p.policy,
                    e.replace('\n', " ")
                ));
            }
        }
    }
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for p in &outcome.policies {
        out.push_str(&summary_row(p));
        out.push('\n');
    }
    out
}

/// Recovers the effective configuration from summary metadata.
pub fn config_from_summary(text: &str) -> Result<ExperimentConfig> {
    let meta: String = text
        .lines()
        .filter_map(|l| l.strip_prefix("# "))
        .filter(|l| !l.starts_with("version=") && !l.starts_with("failed:"))
        .map(|l| format!("{l}\n"))
        .collect();
    ExperimentConfig::from_kv_text(&meta)
}

/// Writes one per-round CSV per policy and `summary.csv` into `dir`.
pub fn write_outputs(outcome: &ExperimentOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for p in &outcome.policies {
        let path = dir.join(run_csv_name(&p.policy, &outcome.config));
        let mut w = BufWriter::new(File::create(&path)?);
        write_run_csv(&mut w, p.succeeded())?;
        w.flush()?;
        written.push(path);
    }
    let path = dir.join(SUMMARY_FILE);
    fs::write(&path, summary_text(outcome))?;
    written.push(path);
    Ok(written)
}
