//! Built-in oracle suites. Each suite checks the library against an
//! independent computation and reports the inputs of the first failing case.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::{random_unit_vector, ArmMode, BanditEnv};
use crate::error::{Error, Result};
use crate::estimators::{configure_params, LambdaMode, MleState, OmdState};
use crate::glm::GlmFamily;
use crate::linalg::{ball_project_hnorm, sherman_morrison, InverseTracker, PsdMatrix};
use crate::policies::{GlbOmdPolicy, Policy};

pub const SUITES: [&str; 5] = [
    "projection",
    "omd-qp",
    "sherman-morrison",
    "mle-grid",
    "coverage",
];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyOptions {
    /// Suites to run; empty means all.
    pub suites: Vec<String>,
    pub cases: Option<usize>,
    pub trials: Option<usize>,
    pub horizon: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: String,
    pub passed: bool,
    /// One-line result statistic.
    pub detail: String,
    /// Inputs of the first failing case.
    pub failure: Option<String>,
}

impl SuiteReport {
    fn new(suite: &str, detail: String, failure: Option<String>) -> Self {
        Self {
            suite: suite.to_string(),
            passed: failure.is_none(),
            detail,
            failure,
        }
    }
}

fn random_spd(d: usize, rng: &mut ChaCha8Rng) -> PsdMatrix {
    let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    let m = &a * a.transpose() + DMatrix::identity(d, d) * rng.random_range(0.05..2.0);
    PsdMatrix::from_matrix(m).expect("A A^T + cI is positive definite")
}

fn hnorm_sq(v: &DVector<f64>, h: &DMatrix<f64>) -> f64 {
    v.dot(&(h * v))
}

/// Uniform point in the radius-`s` ball.
fn random_in_ball(d: usize, s: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let r = s * rng.random::<f64>().powf(1.0 / d as f64);
    random_unit_vector(d, rng) * r
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionStats {
    pub cases: usize,
    pub exterior: usize,
    /// Largest `| |theta| - S |` over exterior cases.
    pub max_boundary_gap: f64,
}

/// Projection check on `cases` random `(zeta, H, S)` with `d <= 4`: the
/// returned point must not lose to any of `points` random feasible points
/// and must sit on the sphere when `zeta` is exterior.
pub fn check_projection(
    cases: usize,
    points: usize,
    seed: u64,
) -> (ProjectionStats, Option<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = ProjectionStats {
        cases,
        exterior: 0,
        max_boundary_gap: 0.0,
    };
    for case in 0..cases {
        let d = rng.random_range(1..=4);
        let h = random_spd(d, &mut rng);
        let s = rng.random_range(0.5..3.0);
        let zeta = random_unit_vector(d, &mut rng) * (s * rng.random_range(0.2..3.0));
        let inputs = || {
            format!(
                "case {case}: zeta={:?} S={s} H={:?}",
                zeta.as_slice(),
                h.as_matrix().as_slice()
            )
        };
        let proj = match ball_project_hnorm(&zeta, &h, s) {
            Ok(p) => p,
            Err(e) => return (stats, Some(format!("{} -> error {e}", inputs()))),
        };
        let theta = proj.point;
        let hm = h.as_matrix();
        if zeta.norm() > s {
            stats.exterior += 1;
            let gap = (theta.norm() - s).abs();
            stats.max_boundary_gap = stats.max_boundary_gap.max(gap);
            if gap > 1e-9 {
                return (stats, Some(format!("{}: |theta| - S = {gap:e}", inputs())));
            }
        } else if theta != zeta {
            return (
                stats,
                Some(format!(
                    "{}: interior point moved to {:?}",
                    inputs(),
                    theta.as_slice()
                )),
            );
        }
        let best = hnorm_sq(&(&theta - &zeta), hm);
        for _ in 0..points {
            let p = if rng.random_bool(0.5) {
                random_in_ball(d, s, &mut rng)
            } else {
                random_unit_vector(d, &mut rng) * s
            };
            let v = hnorm_sq(&(&p - &zeta), hm);
            if best > v + 1e-9 * (1.0 + v) {
                return (
                    stats,
                    Some(format!(
                        "{}: feasible {:?} scores {v} < {best}",
                        inputs(),
                        p.as_slice()
                    )),
                );
            }
        }
    }
    (stats, None)
}

/// Minimizes `grad^T theta + |theta - theta_t|^2_{Q} / 2` with
/// `Q = hess + H / eta` over the ball by projected gradient descent with
/// Euclidean projection.
pub fn omd_step_oracle(
    theta_t: &DVector<f64>,
    h: &DMatrix<f64>,
    grad: &DVector<f64>,
    hess: &DMatrix<f64>,
    eta: f64,
    s: f64,
) -> DVector<f64> {
    let q = hess + h / eta;
    let lip: f64 = (0..q.nrows())
        .map(|i| q.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut th = theta_t.clone();
    for _ in 0..200_000 {
        let g = grad + &q * (&th - theta_t);
        let mut next = &th - g / lip;
        let n = next.norm();
        if n > s {
            next *= s / n;
        }
        let moved = (&next - &th).norm();
        th = next;
        if moved * lip < 1e-12 {
            break;
        }
    }
    th
}

/// Two-step OMD update against direct minimization on `cases` random
/// logistic instances with `d = 2`, `S = 2`. Returns the largest coordinate
/// gap.
pub fn check_omd_qp(cases: usize, seed: u64) -> Result<(f64, Option<String>)> {
    let lg = GlmFamily::logistic();
    let (d, s) = (2, 2.0);
    let params = configure_params(&lg, d, s, 0.1, LambdaMode::Theory)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let mut st = OmdState::new(lg, d, params)?;
        for _ in 0..rng.random_range(0..30) {
            let x = random_unit_vector(d, &mut rng) * rng.random_range(0.2..1.0);
            st.update(&x, if rng.random_bool(0.5) { 1.0 } else { 0.0 })?;
        }
        let x = random_unit_vector(d, &mut rng) * rng.random_range(0.2..1.0);
        let r = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
        let theta_t = st.theta().clone();
        let h = st.h().as_matrix().clone();
        let z = x.dot(&theta_t);
        let grad = &x * lg.nll_grad(z, r)?;
        let hess = &x * x.transpose() * lg.nll_curvature(z)?;
        let oracle = omd_step_oracle(&theta_t, &h, &grad, &hess, params.eta, s);
        st.update(&x, r)?;
        let gap = (st.theta() - &oracle).amax();
        worst = worst.max(gap);
        if gap > 1e-6 {
            return Ok((
                worst,
                Some(format!(
                    "case {case}: theta_t={:?} H={:?} x={:?} r={r}: update {:?} vs oracle {:?}",
                    theta_t.as_slice(),
                    h.as_slice(),
                    x.as_slice(),
                    st.theta().as_slice(),
                    oracle.as_slice()
                )),
            ));
        }
    }
    Ok((worst, None))
}

/// Chains `updates` Sherman-Morrison updates on `lambda I` in dimension `d`
/// and returns the max-abs gap to a fresh dense inverse for both the bare
/// recursion and [`InverseTracker`].
pub fn check_sherman_morrison(d: usize, updates: usize, seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lambda = d as f64;
    let mut dense = DMatrix::<f64>::identity(d, d) * lambda;
    let mut chained = DMatrix::<f64>::identity(d, d) / lambda;
    let mut tracker = InverseTracker::new(PsdMatrix::scaled_identity(d, lambda)?)?;
    for _ in 0..updates {
        let x = random_unit_vector(d, &mut rng) * rng.random_range(0.1..1.0);
        let c = rng.random_range(1e-3..0.25);
        dense.ger(c, &x, &x, 1.0);
        chained = sherman_morrison(&chained, &x, c);
        tracker.rank1_update(&x, c)?;
    }
    let fresh = dense
        .cholesky()
        .ok_or_else(|| Error::Numeric("dense matrix is not positive definite".into()))?
        .inverse();
    Ok((
        (chained - &fresh).amax(),
        (tracker.inverse() - &fresh).amax(),
    ))
}

/// Regularized logistic fit in `d = 2` against a coarse-then-fine grid search
/// over the ball. Returns the largest coordinate gap.
pub fn check_mle_grid(cases: usize, seed: u64) -> Result<(f64, Option<String>)> {
    let lg = GlmFamily::logistic();
    let s = 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let lambda = rng.random_range(0.2..2.0);
        let n = rng.random_range(5..20);
        let mut st = MleState::new(2, lambda)?;
        let tilt = random_unit_vector(2, &mut rng) * 2.0;
        for _ in 0..n {
            let x = random_unit_vector(2, &mut rng);
            let p = lg.mu(x.dot(&tilt))?;
            st.push(x, if rng.random_bool(p) { 1.0 } else { 0.0 })?;
        }
        let fit = st.fit(&lg, s)?;
        let obj = |a: f64, b: f64| st.objective(&lg, &DVector::from_column_slice(&[a, b]));
        let mut best = (f64::INFINITY, 0.0, 0.0);
        let scan =
            |center: (f64, f64), step: f64, half: i64, best: &mut (f64, f64, f64)| -> Result<()> {
                for i in -half..=half {
                    for j in -half..=half {
                        let (a, b) = (center.0 + i as f64 * step, center.1 + j as f64 * step);
                        if a * a + b * b <= s * s {
                            let v = obj(a, b)?;
                            if v < best.0 {
                                *best = (v, a, b);
                            }
                        }
                    }
                }
                Ok(())
            };
        scan((0.0, 0.0), 1e-2, 100, &mut best)?;
        scan((best.1, best.2), 1e-4, 200, &mut best)?;
        let gap = (fit.theta[0] - best.1)
            .abs()
            .max((fit.theta[1] - best.2).abs());
        worst = worst.max(gap);
        let fit_value = st.objective(&lg, &fit.theta)?;
        if !fit.converged || gap > 2e-3 || fit_value > best.0 + 1e-12 {
            let mut msg = format!("case {case}: lambda={lambda} history=[");
            for (x, r) in st.history() {
                let _ = write!(msg, "({:?},{r})", x.as_slice());
            }
            let _ = write!(
                msg,
                "]: fit {:?} (objective {fit_value}, converged {}) vs grid ({}, {}) (objective {})",
                fit.theta.as_slice(),
                fit.converged,
                best.1,
                best.2,
                best.0
            );
            return Ok((worst, Some(msg)));
        }
    }
    Ok((worst, None))
}

/// Runs GLB-OMD with theory-mode parameters for `horizon` rounds and reports
/// whether `theta*` stayed inside the confidence set at every round.
pub fn coverage_trial(
    family: GlmFamily,
    d: usize,
    s: f64,
    horizon: usize,
    delta: f64,
    k: usize,
    seed: u64,
) -> Result<bool> {
    let params = configure_params(&family, d, s, delta, LambdaMode::Theory)?;
    let mut env = BanditEnv::synthetic(family, d, s, k, ArmMode::ResampledPerRound, seed)?;
    let mut pol = GlbOmdPolicy::new(family, d, params)?;
    let theta_star = env.theta_star().clone();
    for t in 1..=horizon {
        if !pol.state().confidence_set().contains(&theta_star)? {
            return Ok(false);
        }
        let actions = env.gen_action_set(t).to_vec();
        let sel = pol.select(&actions)?;
        let r = env.pull(sel.index)?;
        pol.observe(&actions[sel.index], r)?;
    }
    pol.state().confidence_set().contains(&theta_star)
}

/// Fraction of `trials` seeded coverage trials with `theta*` covered at every
/// round, plus the seeds of uncovered trials.
pub fn coverage_rate(
    family: GlmFamily,
    d: usize,
    s: f64,
    horizon: usize,
    delta: f64,
    trials: usize,
    seed: u64,
) -> Result<(f64, Vec<u64>)> {
    let mut missed = Vec::new();
    for i in 0..trials {
        let trial_seed = seed.wrapping_add(i as u64);
        if !coverage_trial(family, d, s, horizon, delta, 20, trial_seed)? {
            missed.push(trial_seed);
        }
    }
    Ok((1.0 - missed.len() as f64 / trials as f64, missed))
}

pub fn run_suite(name: &str, opts: &VerifyOptions) -> Result<SuiteReport> {
    let seed = opts.seed;
    Ok(match name {
        "projection" => {
            let cases = opts.cases.unwrap_or(1000);
            let (stats, failure) = check_projection(cases, 10_000, seed);
            SuiteReport::new(
                name,
                format!(
                    "{cases} cases ({} exterior), max boundary gap {:e}",
                    stats.exterior, stats.max_boundary_gap
                ),
                failure,
            )
        }
        "omd-qp" => {
            let cases = opts.cases.unwrap_or(50);
            let (worst, failure) = check_omd_qp(cases, seed)?;
            SuiteReport::new(
                name,
                format!("{cases} cases, max coordinate gap {worst:e}"),
                failure,
            )
        }
        "sherman-morrison" => {
            let updates = opts.cases.unwrap_or(10_000);
            let (chained, tracked) = check_sherman_morrison(5, updates, seed)?;
            let failure = (chained > 1e-6 || tracked > 1e-6).then(|| {
                format!(
                    "d=5 updates={updates} seed={seed}: chained {chained:e}, tracked {tracked:e}"
                )
            });
            SuiteReport::new(
                name,
                format!("d=5, {updates} updates, max-abs error {chained:e} (tracker {tracked:e})"),
                failure,
            )
        }
        "mle-grid" => {
            let cases = opts.cases.unwrap_or(3);
            let (worst, failure) = check_mle_grid(cases, seed)?;
            SuiteReport::new(
                name,
                format!("{cases} cases, max coordinate gap {worst:e}"),
                failure,
            )
        }
        "coverage" => {
            let trials = opts.trials.unwrap_or(30);
            let horizon = opts.horizon.unwrap_or(200);
            let delta = 0.1;
            let (rate, missed) =
                coverage_rate(GlmFamily::logistic(), 2, 1.0, horizon, delta, trials, seed)?;
            let failure = (rate < 1.0 - delta).then(|| {
                format!("logistic d=2 S=1 T={horizon} delta={delta}: uncovered seeds {missed:?}")
            });
            SuiteReport::new(
                name,
                format!(
                    "coverage {rate:.3} over {trials} trials (T={horizon}, target >= {})",
                    1.0 - delta
                ),
                failure,
            )
        }
        other => {
            return Err(Error::Config(format!(
                "unknown suite `{other}` (expected one of {})",
                SUITES.join(", ")
            )))
        }
    })
}

pub fn run_verify(opts: &VerifyOptions) -> Result<Vec<SuiteReport>> {
    let names: Vec<&str> = if opts.suites.is_empty() {
        SUITES.to_vec()
    } else {
        opts.suites.iter().map(String::as_str).collect()
    };
    names.into_iter().map(|n| run_suite(n, opts)).collect()
}
