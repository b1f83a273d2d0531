use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use glb_omd::glm::GlmFamily;
use glb_omd::harness::{
    run_bench, run_experiment, run_verify, write_bench, write_outputs, BenchConfig,
    ExperimentConfig, VerifyOptions, SEED_ENV_VAR,
};
use glb_omd::Error;

#[derive(Parser)]
#[command(
    name = "glb-omd",
    version,
    about = "Generalized linear bandits with an online mirror descent estimator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a multi-trial, multi-policy experiment and write CSVs plus summary.csv.
    Run(Box<RunArgs>),
    /// Run the built-in oracle suites.
    Verify(VerifyArgs),
    /// Time select + observe per round for each policy.
    Bench(BenchArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Reward family: logistic, poisson or gaussian.
    #[arg(long)]
    family: Option<String>,
    /// Gaussian noise variance.
    #[arg(long)]
    dispersion: Option<f64>,
    /// Context dimension.
    #[arg(long)]
    d: Option<usize>,
    /// Parameter-norm bound.
    #[arg(long = "S")]
    s: Option<f64>,
    /// Horizon.
    #[arg(long = "T")]
    horizon: Option<usize>,
    /// Arms per round.
    #[arg(long = "K")]
    k: Option<usize>,
    /// Confidence level in (0, 1].
    #[arg(long)]
    delta: Option<f64>,
    /// Independent trials per policy.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trials: Option<u64>,
    /// Policy to run; repeat for several.
    #[arg(long = "policy")]
    policies: Vec<String>,
    /// theory or practical.
    #[arg(long)]
    lambda_mode: Option<String>,
    /// Multiplier on the GLM-UCB confidence radius.
    #[arg(long)]
    radius_scale: Option<f64>,
    /// Base seed; falls back to the GLB_OMD_SEED environment variable.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
    /// fixed or resampled.
    #[arg(long)]
    arm_mode: Option<String>,
    /// Arm file; implies file-backed arms.
    #[arg(long)]
    arm_file: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat key=value configuration file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl RunArgs {
    fn flag_pairs(&self) -> Vec<(String, String)> {
        let mut pairs = Vec::new();
        let mut push = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                pairs.push((k.to_string(), v));
            }
        };
        push("family", self.family.clone());
        push("dispersion", self.dispersion.map(|v| v.to_string()));
        push("d", self.d.map(|v| v.to_string()));
        push("S", self.s.map(|v| v.to_string()));
        push("T", self.horizon.map(|v| v.to_string()));
        push("K", self.k.map(|v| v.to_string()));
        push("delta", self.delta.map(|v| v.to_string()));
        push("trials", self.trials.map(|v| v.to_string()));
        push(
            "policy",
            (!self.policies.is_empty()).then(|| self.policies.join(",")),
        );
        push("lambda_mode", self.lambda_mode.clone());
        push("radius_scale", self.radius_scale.map(|v| v.to_string()));
        push("seed", self.seed.map(|v| v.to_string()));
        push("jobs", self.jobs.map(|v| v.to_string()));
        push("arm_mode", self.arm_mode.clone());
        push(
            "arm_file",
            self.arm_file.as_ref().map(|p| p.display().to_string()),
        );
        push("out", self.out.as_ref().map(|p| p.display().to_string()));
        pairs
    }
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite to run; repeat for several. Default: all.
    #[arg(long = "suite")]
    suites: Vec<String>,
    /// Cases per suite (updates for sherman-morrison).
    #[arg(long)]
    cases: Option<usize>,
    /// Coverage trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Coverage horizon.
    #[arg(long = "T")]
    horizon: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct BenchArgs {
    /// Policies to time, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = ["glb-omd".to_string(), "glm-ucb".to_string()])]
    policies: Vec<String>,
    #[arg(long, default_value = "logistic")]
    family: String,
    #[arg(long, default_value_t = 3)]
    d: usize,
    #[arg(long = "K", default_value_t = 20)]
    k: usize,
    #[arg(long = "S", default_value_t = 3.0)]
    s: f64,
    /// Horizon for every policy. Default: 5000 for glm-ucb, 10000 otherwise.
    #[arg(long = "T")]
    horizon: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "bench")]
    out: PathBuf,
}

fn config_error(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}

fn run(args: RunArgs) -> ExitCode {
    let env_seed = std::env::var(SEED_ENV_VAR).ok();
    let cfg = match ExperimentConfig::resolve(
        args.config.as_deref(),
        &args.flag_pairs(),
        env_seed.as_deref(),
    ) {
        Ok(cfg) => cfg,
        Err(e) => return config_error(&e),
    };
    let outcome = match run_experiment(&cfg) {
        Ok(o) => o,
        Err(e @ (Error::Config(_) | Error::Load { .. })) => return config_error(&e),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    match write_outputs(&outcome, &cfg.out) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    for p in &outcome.policies {
        let regrets = p.final_regrets();
        let mean = regrets.iter().sum::<f64>() / regrets.len().max(1) as f64;
        println!(
            "{}: {}/{} trials ok, mean final regret {mean:.3}",
            p.policy,
            p.trials.len() - p.failed(),
            p.trials.len()
        );
        for (i, t) in p.trials.iter().enumerate() {
            if let Err(e) = t {
                eprintln!("{} trial {i} failed: {e}", p.policy);
            }
        }
    }
    if outcome.all_failed() {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

fn verify(args: VerifyArgs) -> ExitCode {
    let opts = VerifyOptions {
        suites: args.suites,
        cases: args.cases,
        trials: args.trials,
        horizon: args.horizon,
        seed: args.seed,
    };
    let reports = match run_verify(&opts) {
        Ok(r) => r,
        Err(e @ Error::Config(_)) => return config_error(&e),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    let mut ok = true;
    for r in &reports {
        println!(
            "{} {}: {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.suite,
            r.detail
        );
        if let Some(f) = &r.failure {
            println!("  failing input: {f}");
        }
        ok &= r.passed;
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn bench(args: BenchArgs) -> ExitCode {
    let family = match GlmFamily::from_name(&args.family, None) {
        Ok(f) => f,
        Err(e) => return config_error(&e),
    };
    let cfg = BenchConfig {
        policies: args.policies,
        family,
        d: args.d,
        k: args.k,
        s: args.s,
        horizon: args.horizon,
        seed: args.seed,
        ..BenchConfig::default()
    };
    let results = match run_bench(&cfg) {
        Ok(r) => r,
        Err(e @ Error::Config(_)) => return config_error(&e),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    if let Err(e) = write_bench(&results, &args.out) {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    for r in &results {
        println!(
            "{}: T={} early {:.0} ns, late {:.0} ns, ratio {:.3}",
            r.policy,
            r.horizon,
            r.early_mean_ns,
            r.late_mean_ns,
            r.ratio()
        );
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => run(*args),
        Command::Verify(args) => verify(args),
        Command::Bench(args) => bench(args),
    }
}
