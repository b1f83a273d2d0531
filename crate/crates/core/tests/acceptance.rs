//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use glb_omd::env::{run_trial, ArmMode, BanditEnv};
use glb_omd::estimators::{beta_radius, configure_params, LambdaMode, OmdParams};
use glb_omd::glm::{FamilyKind, GlmFamily};
use glb_omd::harness::bench::{bench_policy, BenchConfig};
use glb_omd::harness::verify::{
    check_omd_qp, check_projection, check_sherman_morrison, coverage_rate,
};
use glb_omd::harness::{run_experiment, ExperimentConfig, PolicyOutcome};
use glb_omd::policies::{GlbOmdPolicy, Policy};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(f64::MIN_POSITIVE)
}

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Trial-averaged cumulative regret curve.
fn mean_curve(p: &PolicyOutcome) -> Vec<f64> {
    let runs: Vec<Vec<f64>> = p.succeeded().map(|(_, r)| r.cum_regret()).collect();
    let n = runs.len() as f64;
    (0..runs.first().map_or(0, Vec::len))
        .map(|t| runs.iter().map(|c| c[t]).sum::<f64>() / n)
        .collect()
}

/// Least-squares slope of `ln cum_regret(t)` against `ln t` over rounds
/// `first..=last` (1-based).
fn loglog_slope(curve: &[f64], first: usize, last: usize) -> f64 {
    if curve.len() < last {
        return f64::NAN;
    }
    let pts: Vec<(f64, f64)> = (first..=last)
        .map(|t| ((t as f64).ln(), curve[t - 1].max(f64::MIN_POSITIVE).ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn within(elapsed: Duration, budget_s: u64) -> bool {
    elapsed <= Duration::from_secs(budget_s)
}

fn omd_equivalence() -> Outcome {
    let clock = Instant::now();
    let (worst, failure) = check_omd_qp(50, 2024).expect("oracle run");
    let el = clock.elapsed();
    outcome(
        failure.is_none() && worst <= 1e-6 && within(el, 10),
        format!("50 logistic instances d=2 S=2, max coordinate gap {worst:.2e} (tol 1e-6), {el:.2?} (budget 10s){}",
            failure.map(|f| format!("; {f}")).unwrap_or_default()),
    )
}

fn projection_kkt() -> Outcome {
    let clock = Instant::now();
    let (stats, failure) = check_projection(1000, 10_000, 2024);
    let el = clock.elapsed();
    outcome(
        failure.is_none() && within(el, 30),
        format!(
            "1000 cases d<=4 x 10^4 feasible points, {} exterior, max | |theta| - S | {:.2e} (tol 1e-9), {el:.2?} (budget 30s){}",
            stats.exterior,
            stats.max_boundary_gap,
            failure.map(|f| format!("; {f}")).unwrap_or_default()
        ),
    )
}

fn sherman_morrison_drift() -> Outcome {
    let clock = Instant::now();
    let (chained, tracked) = check_sherman_morrison(5, 10_000, 2024).expect("drift run");
    let el = clock.elapsed();
    outcome(
        chained <= 1e-6 && tracked <= 1e-6 && within(el, 5),
        format!("d=5, 10^4 rank-1 updates, max-abs error {chained:.2e} (tracker {tracked:.2e}, tol 1e-6), {el:.2?} (budget 5s)"),
    )
}

fn parameter_formulas() -> Outcome {
    let mut fails = Vec::new();
    let mut check = |name: &str, got: f64, want: f64| {
        if !rel_close(got, want, 1e-12) {
            fails.push(format!("{name}: {got} vs {want}"));
        }
    };
    let ga = GlmFamily::gaussian(1.0).unwrap();
    let lg = GlmFamily::logistic();

    let p = configure_params(&ga, 2, 1.0, 0.1, LambdaMode::Theory).unwrap();
    check("gaussian eta", p.eta, 1.0);
    check("gaussian lambda", p.lambda, 2.0);
    let p = configure_params(&lg, 2, 1.0, 0.1, LambdaMode::Theory).unwrap();
    check("logistic eta", p.eta, 2.0);
    check("logistic lambda", p.lambda, 56.0);
    for f in [lg, GlmFamily::poisson(), ga] {
        let p = configure_params(&f, 3, 2.0, 0.1, LambdaMode::Practical).unwrap();
        check("practical lambda", p.lambda, 3.0);
    }

    let base = OmdParams {
        s: 1.0,
        eta: 1.0,
        lambda: 1.0,
        delta: 1.0,
        lambda_mode: LambdaMode::Theory,
        link_sup: 1.0,
    };
    // Values from 40-digit evaluations of the radius formula.
    check(
        "beta t=0",
        beta_radius(&base, &ga, 2, 0),
        3.509_667_529_370_744,
    );
    let half = OmdParams { delta: 0.5, ..base };
    let gap = beta_radius(&half, &ga, 2, 0).powi(2) - beta_radius(&base, &ga, 2, 0).powi(2);
    check("delta identity", gap, 2.0 * std::f64::consts::LN_2);
    let p = OmdParams {
        lambda: 2.0,
        delta: 0.1,
        ..base
    };
    check(
        "beta t=100",
        beta_radius(&p, &ga, 2, 100),
        8.252_565_900_700_178,
    );

    let detail = if fails.is_empty() {
        "configure_params (eta=1, lambda=2; eta=2, lambda=56; practical lambda=d) and beta_radius (3.509667529370744, 2 eta ln 2, 8.252565900700178) at 1e-12 relative".to_string()
    } else {
        fails.join("; ")
    };
    outcome(fails.is_empty(), detail)
}

fn coverage(family: GlmFamily, label: &str) -> Outcome {
    let clock = Instant::now();
    let (rate, missed) = coverage_rate(family, 2, 1.0, 500, 0.1, 100, 1000).expect("coverage run");
    let el = clock.elapsed();
    outcome(
        rate >= 0.90 && within(el, 300),
        format!("{label} d=2 S=1 T=500 delta=0.1 theory, 100 trials: coverage {rate:.2} (need >= 0.90), uncovered seeds {missed:?}, {el:.2?} (budget 300s)"),
    )
}

fn sublinear_regret() -> Outcome {
    let clock = Instant::now();
    let cfg = ExperimentConfig {
        family: FamilyKind::Logistic,
        d: 3,
        s: 3.0,
        k: 20,
        horizon: 10_000,
        trials: 10,
        lambda_mode: LambdaMode::Practical,
        jobs: jobs(),
        seed: 100,
        ..ExperimentConfig::default()
    };
    let o = run_experiment(&cfg).expect("experiment");
    let p = &o.policies[0];
    let curve = mean_curve(p);
    let slope = loglog_slope(&curve, 1000, 10_000);
    let el = clock.elapsed();
    outcome(
        p.failed() == 0 && (0.35..=0.85).contains(&slope) && within(el, 600),
        format!(
            "logistic d=3 S=3 K=20 practical T=10^4, 10 trials: log-log slope over [10^3, 10^4] = {slope:.3} (need [0.35, 0.85]), final regret {:.1}, {el:.2?}",
            curve.last().copied().unwrap_or(f64::NAN)
        ),
    )
}

fn constant_cost() -> Outcome {
    let clock = Instant::now();
    let cfg = BenchConfig {
        seed: 100,
        ..BenchConfig::default()
    };
    let omd = bench_policy(&cfg, "glb-omd").expect("glb-omd bench");
    let ucb = bench_policy(&cfg, "glm-ucb").expect("glm-ucb bench");
    let el = clock.elapsed();
    outcome(
        omd.ratio() <= 3.0 && ucb.ratio() >= 2.0 && within(el, 600),
        format!(
            "d=3 K=20: GLB-OMD T=10^4 late/early {:.3} (need <= 3; {:.0} ns vs {:.0} ns), GLM-UCB T=5000 late/early {:.3} (need >= 2; {:.0} ns vs {:.0} ns), {el:.2?}",
            omd.ratio(),
            omd.late_mean_ns,
            omd.early_mean_ns,
            ucb.ratio(),
            ucb.late_mean_ns,
            ucb.early_mean_ns
        ),
    )
}

fn ordering() -> Outcome {
    let clock = Instant::now();
    let cfg = ExperimentConfig {
        family: FamilyKind::Logistic,
        s: 3.0,
        horizon: 3000,
        trials: 10,
        policies: vec!["glb-omd".into(), "glm-ucb".into()],
        jobs: jobs(),
        seed: 200,
        ..ExperimentConfig::default()
    };
    let o = run_experiment(&cfg).expect("experiment");
    let mean = |p: &PolicyOutcome| {
        let r = p.final_regrets();
        r.iter().sum::<f64>() / r.len() as f64
    };
    let (omd, ucb) = (mean(&o.policies[0]), mean(&o.policies[1]));
    let failed = o.policies.iter().map(|p| p.failed()).sum::<usize>();
    let el = clock.elapsed();
    outcome(
        failed == 0 && omd <= ucb && within(el, 600),
        format!(
            "logistic d={} S=3 K={} T=3000, 10 trials: GLB-OMD mean final regret {omd:.1} vs GLM-UCB {ucb:.1}, {el:.2?}",
            cfg.d, cfg.k
        ),
    )
}

fn poisson_run() -> Outcome {
    let clock = Instant::now();
    let cfg = ExperimentConfig {
        family: FamilyKind::Poisson,
        s: 3.0,
        horizon: 3000,
        trials: 10,
        jobs: jobs(),
        seed: 300,
        ..ExperimentConfig::default()
    };
    let o = run_experiment(&cfg).expect("experiment");
    let p = &o.policies[0];
    let rounds_finite = p.succeeded().all(|(_, r)| {
        r.rounds
            .iter()
            .all(|x| x.reward.is_finite() && x.cum_regret.is_finite() && x.beta.is_finite())
    });

    // Final learner state of one trial.
    let po = GlmFamily::poisson();
    let params = configure_params(&po, cfg.d, 3.0, cfg.delta, LambdaMode::Practical).unwrap();
    let mut env =
        BanditEnv::synthetic(po, cfg.d, 3.0, cfg.k, ArmMode::ResampledPerRound, 300).unwrap();
    let mut pol = GlbOmdPolicy::new(po, cfg.d, params).unwrap();
    run_trial(&mut pol, &mut env, 3000).unwrap();
    let st = pol.state();
    let state_finite = st.theta().iter().all(|v| v.is_finite())
        && st.theta().norm() <= 3.0 + 1e-9
        && st.h().as_matrix().iter().all(|v| v.is_finite())
        && pol.beta().is_finite();

    let curve = mean_curve(p);
    let slope = loglog_slope(&curve, 300, 3000);
    let el = clock.elapsed();
    outcome(
        p.failed() == 0 && rounds_finite && state_finite && slope <= 0.85,
        format!(
            "poisson d={} S=3 T=3000, 10 trials: {} failed, finite rounds {rounds_finite}, finite state {state_finite}, final regret {:.1}, log-log slope over [300, 3000] = {slope:.3} (need <= 0.85; inside [0.35, 0.85]: {}), {el:.2?}",
            cfg.d,
            p.failed(),
            curve.last().copied().unwrap_or(f64::NAN),
            (0.35..=0.85).contains(&slope)
        ),
    )
}

fn gaussian_degeneration() -> Outcome {
    let ga = GlmFamily::gaussian(1.0).unwrap();
    let eta = configure_params(&ga, 2, 1.0, 0.1, LambdaMode::Theory)
        .unwrap()
        .eta;
    let params = configure_params(&ga, 3, 1.0, 0.1, LambdaMode::Practical).unwrap();
    let mut env = BanditEnv::synthetic(ga, 3, 1.0, 20, ArmMode::ResampledPerRound, 400).unwrap();
    let mut pol = GlbOmdPolicy::new(ga, 3, params).unwrap();
    let rec = run_trial(&mut pol, &mut env, 500).unwrap();
    let kappa_star = rec.kappa_star().unwrap();
    let cov = coverage(ga, "gaussian");
    outcome(
        eta == 1.0 && kappa_star == 1.0 && cov.passed,
        format!(
            "eta = {eta}, kappa* = {kappa_star} (both exactly 1); coverage: {}",
            cov.detail
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: Vec<Criterion> = vec![
        ("omd-equivalence", omd_equivalence),
        ("projection-kkt", projection_kkt),
        ("sherman-morrison-drift", sherman_morrison_drift),
        ("parameter-formulas", parameter_formulas),
        ("coverage", || coverage(GlmFamily::logistic(), "logistic")),
        ("sublinear-regret", sublinear_regret),
        ("constant-cost", constant_cost),
        ("ordering", ordering),
        ("poisson-unbounded", poisson_run),
        ("gaussian-degeneration", gaussian_degeneration),
    ];
    let mut failed = 0;
    for (name, f) in &criteria {
        let o = f();
        println!(
            "{} {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.passed);
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
