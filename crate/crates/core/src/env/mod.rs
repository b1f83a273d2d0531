//! Synthetic and file-backed bandit environments, regret accounting, and the
//! trial loop.

mod arms;
mod record;

pub use arms::{format_arm_file, load_arm_file, parse_arm_file, write_arm_file, ArmSet};
pub use record::{
    kappa_star_empirical, write_run_csv, RoundLog, RunRecord, RunSummary, RUN_CSV_HEADER,
};

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::glm::GlmFamily;
use crate::policies::Policy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArmMode {
    /// The same `K` unit vectors every round.
    FixedSet,
    /// `K` fresh uniform unit vectors every round.
    #[default]
    ResampledPerRound,
    /// Contexts (and optionally Bernoulli means) loaded from an arm file.
    FromFile,
}

impl ArmMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ArmMode::FixedSet => "fixed",
            ArmMode::ResampledPerRound => "resampled",
            ArmMode::FromFile => "file",
        }
    }
}

impl fmt::Display for ArmMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArmMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fixed" | "fixed_set" => Ok(ArmMode::FixedSet),
            "resampled" | "resampled_per_round" => Ok(ArmMode::ResampledPerRound),
            "file" | "from_file" => Ok(ArmMode::FromFile),
            other => Err(Error::Config(format!("unknown arm mode `{other}`"))),
        }
    }
}

/// Uniform draw from the unit sphere in `R^d`.
pub fn random_unit_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(d, |_, _| StandardNormal.sample(rng));
        let n: f64 = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// A stochastic GLM bandit with hidden parameter `theta*`.
///
/// Arm draws and reward draws use separate random streams so that two
/// policies facing the same seed see the same sequence of action sets for as
/// long as the sets do not depend on past choices.
#[derive(Debug, Clone)]
pub struct BanditEnv {
    family: GlmFamily,
    theta_star: DVector<f64>,
    s: f64,
    mode: ArmMode,
    k: usize,
    arm_rng: ChaCha8Rng,
    reward_rng: ChaCha8Rng,
    fixed: Vec<DVector<f64>>,
    means: Option<Vec<f64>>,
    current: Vec<DVector<f64>>,
}

fn rngs(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let arm_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reward_rng = ChaCha8Rng::seed_from_u64(seed);
    reward_rng.set_stream(1);
    (arm_rng, reward_rng)
}

impl BanditEnv {
    /// Synthetic environment with `theta*` uniform on the radius-`S` sphere.
    pub fn synthetic(
        family: GlmFamily,
        d: usize,
        s: f64,
        k: usize,
        mode: ArmMode,
        seed: u64,
    ) -> Result<Self> {
        if mode == ArmMode::FromFile {
            return Err(Error::Config("file-backed arms need an arm file".into()));
        }
        if d == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if k < 2 {
            return Err(Error::Config(format!(
                "need at least 2 arms per round, got {k}"
            )));
        }
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::Config(format!(
                "parameter bound S must be positive, got {s}"
            )));
        }
        let (mut arm_rng, reward_rng) = rngs(seed);
        let theta_star = random_unit_vector(d, &mut arm_rng) * s;
        let fixed = if mode == ArmMode::FixedSet {
            (0..k)
                .map(|_| random_unit_vector(d, &mut arm_rng))
                .collect()
        } else {
            Vec::new()
        };
        Ok(Self {
            family,
            theta_star,
            s,
            mode,
            k,
            arm_rng,
            reward_rng,
            fixed,
            means: None,
            current: Vec::new(),
        })
    }

    /// Environment over the arms of an arm file. With per-arm means the
    /// rewards are Bernoulli draws of those means; otherwise they follow the
    /// GLM at a `theta*` drawn on the radius-`S` sphere.
    pub fn from_arms(family: GlmFamily, arms: ArmSet, s: f64, seed: u64) -> Result<Self> {
        if arms.len() < 2 {
            return Err(Error::Config(format!(
                "need at least 2 arms, got {}",
                arms.len()
            )));
        }
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::Config(format!(
                "parameter bound S must be positive, got {s}"
            )));
        }
        let (mut arm_rng, reward_rng) = rngs(seed);
        let theta_star = random_unit_vector(arms.dim(), &mut arm_rng) * s;
        Ok(Self {
            family,
            theta_star,
            s,
            mode: ArmMode::FromFile,
            k: arms.len(),
            arm_rng,
            reward_rng,
            fixed: arms.contexts,
            means: arms.means,
            current: Vec::new(),
        })
    }

    /// Replaces the hidden parameter.
    pub fn with_theta_star(mut self, theta: DVector<f64>) -> Result<Self> {
        if theta.len() != self.theta_star.len() {
            return Err(Error::Config(format!(
                "theta* has length {}, expected {}",
                theta.len(),
                self.theta_star.len()
            )));
        }
        if theta.norm() > self.s + 1e-9 {
            return Err(Error::Config(format!(
                "|theta*| = {} exceeds S = {}",
                theta.norm(),
                self.s
            )));
        }
        self.theta_star = theta;
        Ok(self)
    }

    pub fn family(&self) -> &GlmFamily {
        &self.family
    }

    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }

    pub fn arms_per_round(&self) -> usize {
        self.k
    }

    pub fn mode(&self) -> ArmMode {
        self.mode
    }

    /// The hidden parameter. For evaluation code only; policies never see it.
    pub fn theta_star(&self) -> &DVector<f64> {
        &self.theta_star
    }

    /// Presents the action set of round `t` and makes it current.
    pub fn gen_action_set(&mut self, _t: usize) -> &[DVector<f64>] {
        self.current = match self.mode {
            ArmMode::FixedSet | ArmMode::FromFile => self.fixed.clone(),
            ArmMode::ResampledPerRound => {
                let d = self.dim();
                (0..self.k)
                    .map(|_| random_unit_vector(d, &mut self.arm_rng))
                    .collect()
            }
        };
        &self.current
    }

    pub fn current_actions(&self) -> &[DVector<f64>] {
        &self.current
    }

    /// Reward for action `x` under the GLM at `theta*`.
    pub fn step(&mut self, x: &DVector<f64>) -> Result<f64> {
        self.family
            .sample_reward(x.dot(&self.theta_star), &mut self.reward_rng)
    }

    /// Reward for arm `index` of the current action set.
    pub fn pull(&mut self, index: usize) -> Result<f64> {
        let x = self.current.get(index).ok_or_else(|| {
            Error::Contract(format!("arm {index} is not in the current action set"))
        })?;
        match &self.means {
            Some(means) => {
                let b = Bernoulli::new(means[index]).map_err(|e| Error::Numeric(e.to_string()))?;
                Ok(if b.sample(&mut self.reward_rng) {
                    1.0
                } else {
                    0.0
                })
            }
            None => {
                let z = x.dot(&self.theta_star);
                self.family.sample_reward(z, &mut self.reward_rng)
            }
        }
    }

    /// Expected reward of arm `index` of `actions`.
    pub fn mean_reward(&self, actions: &[DVector<f64>], index: usize) -> Result<f64> {
        match &self.means {
            Some(means) => Ok(means[index]),
            None => self.family.mu(actions[index].dot(&self.theta_star)),
        }
    }

    /// Link slope at arm `index` of `actions`.
    fn slope(&self, actions: &[DVector<f64>], index: usize) -> Result<f64> {
        match &self.means {
            Some(means) => Ok(self.family.mu_prime_at_mean(means[index])),
            None => self.family.mu_prime(actions[index].dot(&self.theta_star)),
        }
    }

    /// Best arm of `actions` and its expected reward. Under a monotone link
    /// this is the arm with the largest margin `x^T theta*`; ties go to the
    /// lowest index.
    pub fn optimal_action(&self, actions: &[DVector<f64>]) -> Result<(usize, f64)> {
        if actions.is_empty() {
            return Err(Error::Contract("action set is empty".into()));
        }
        let mut best = 0;
        match &self.means {
            Some(means) => {
                for (i, m) in means.iter().enumerate().take(actions.len()) {
                    if *m > means[best] {
                        best = i;
                    }
                }
            }
            None => {
                let mut best_margin = f64::NEG_INFINITY;
                for (i, x) in actions.iter().enumerate() {
                    let z = x.dot(&self.theta_star);
                    if z > best_margin {
                        best_margin = z;
                        best = i;
                    }
                }
            }
        }
        Ok((best, self.mean_reward(actions, best)?))
    }
}

/// Runs `horizon` rounds of select, pull, observe and logs regret against the
/// per-round optimal arm.
pub fn run_trial(
    policy: &mut dyn Policy,
    env: &mut BanditEnv,
    horizon: usize,
) -> Result<RunRecord> {
    if horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    let kappa_analytic = env.family().bounds(env.s)?.kappa;
    let mut rounds = Vec::with_capacity(horizon);
    let mut optimal_slopes = Vec::with_capacity(horizon);
    let mut min_slope = f64::INFINITY;
    let mut cum_regret = 0.0;
    let mut wall = 0u64;

    for t in 1..=horizon {
        let actions = env.gen_action_set(t).to_vec();
        let beta = policy.beta();

        let clock = Instant::now();
        let sel = policy.select(&actions)?;
        let select_ns = clock.elapsed().as_nanos() as u64;

        let reward = env.pull(sel.index)?;

        let clock = Instant::now();
        policy.observe(&actions[sel.index], reward)?;
        let round_time_ns = select_ns + clock.elapsed().as_nanos() as u64;
        wall += round_time_ns;

        let (opt, opt_mean) = env.optimal_action(&actions)?;
        let inst_regret = opt_mean - env.mean_reward(&actions, sel.index)?;
        cum_regret += inst_regret;
        optimal_slopes.push(env.slope(&actions, opt)?);
        for i in 0..actions.len() {
            min_slope = min_slope.min(env.slope(&actions, i)?);
        }
        rounds.push(RoundLog {
            t,
            arm: sel.index,
            reward,
            inst_regret,
            cum_regret,
            beta,
            round_time_ns,
        });
    }

    let summary = RunSummary {
        total_regret: cum_regret,
        kappa_analytic,
        kappa_empirical: 1.0 / min_slope,
        wall_time_ns: wall,
        fit_warnings: policy.fit_warnings(),
    };
    Ok(RunRecord {
        policy: policy.name().to_string(),
        rounds,
        optimal_slopes,
        summary,
    })
}

impl RunRecord {
    pub fn kappa_star(&self) -> Result<f64> {
        kappa_star_empirical(&self.optimal_slopes)
    }
}
