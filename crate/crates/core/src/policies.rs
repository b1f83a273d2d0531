//! Arm-selection policies behind a common interface.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::estimators::{omd::check_action, MleState, OmdParams, OmdState};
use crate::glm::GlmFamily;
use crate::linalg::{weighted_norm, InverseTracker, PsdMatrix};

/// Rounds between cold refits of the GLM-UCB estimate; warm-started Newton
/// runs in between.
pub const GLM_UCB_REFIT_EVERY: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub index: usize,
    /// Optimistic score of the chosen arm.
    pub score: f64,
}

/// A bandit learner. `select` is deterministic given the learner state and the
/// presented arms.
pub trait Policy: Send {
    fn name(&self) -> &str;

    fn select(&self, actions: &[DVector<f64>]) -> Result<Selection>;

    fn observe(&mut self, x: &DVector<f64>, r: f64) -> Result<()>;

    /// Exploration radius in use for the next selection.
    fn beta(&self) -> f64;

    fn estimate(&self) -> &DVector<f64>;

    /// Number of fits that stopped before reaching the stationarity tolerance.
    fn fit_warnings(&self) -> usize {
        0
    }
}

/// Index of the largest score, lowest index on ties.
fn argmax(scores: impl Iterator<Item = Result<f64>>) -> Result<Selection> {
    let mut best: Option<Selection> = None;
    for (index, score) in scores.enumerate() {
        let score = score?;
        if score.is_nan() {
            return Err(Error::Numeric(format!("score of arm {index} is NaN")));
        }
        if best.is_none_or(|b| score > b.score) {
            best = Some(Selection { index, score });
        }
    }
    best.ok_or_else(|| Error::Contract("action set is empty".into()))
}

fn check_actions(actions: &[DVector<f64>], d: usize) -> Result<()> {
    if actions.is_empty() {
        return Err(Error::Contract("action set is empty".into()));
    }
    actions.iter().try_for_each(|x| check_action(x, d))
}

/// Optimistic selection over the mirror-descent confidence ellipsoid:
/// `argmax_x x^T theta_t + beta_t |x|_{H_t^{-1}}`.
#[derive(Debug, Clone)]
pub struct GlbOmdPolicy {
    state: OmdState,
    explore: bool,
    frozen: bool,
}

impl GlbOmdPolicy {
    pub fn new(family: GlmFamily, d: usize, params: OmdParams) -> Result<Self> {
        Ok(Self {
            state: OmdState::new(family, d, params)?,
            explore: true,
            frozen: false,
        })
    }

    /// Same learner with the exploration bonus switched off.
    pub fn greedy(family: GlmFamily, d: usize, params: OmdParams) -> Result<Self> {
        Ok(Self {
            explore: false,
            ..Self::new(family, d, params)?
        })
    }

    pub fn state(&self) -> &OmdState {
        &self.state
    }

    pub fn params(&self) -> &OmdParams {
        self.state.params()
    }

    /// Fixes the estimate and stops learning. Test hook.
    #[doc(hidden)]
    pub fn pin_estimate(&mut self, theta: DVector<f64>) {
        self.state.set_theta(theta);
        self.frozen = true;
    }

    pub fn score(&self, x: &DVector<f64>) -> Result<f64> {
        let payoff = x.dot(self.state.theta());
        let bonus = self.beta();
        if bonus == 0.0 {
            return Ok(payoff);
        }
        Ok(payoff + bonus * weighted_norm(x, self.state.tracker().inverse())?)
    }
}

impl Policy for GlbOmdPolicy {
    fn name(&self) -> &str {
        if self.explore {
            "glb-omd"
        } else {
            "greedy"
        }
    }

    fn select(&self, actions: &[DVector<f64>]) -> Result<Selection> {
        check_actions(actions, self.state.dim())?;
        argmax(actions.iter().map(|x| self.score(x)))
    }

    fn observe(&mut self, x: &DVector<f64>, r: f64) -> Result<()> {
        if self.frozen {
            return Ok(());
        }
        self.state.update(x, r)
    }

    fn beta(&self) -> f64 {
        if self.explore {
            self.state.beta()
        } else {
            0.0
        }
    }

    fn estimate(&self) -> &DVector<f64> {
        self.state.theta()
    }
}

/// Maximum-likelihood baseline with bonus
/// `radius_scale * kappa * sqrt(d ln(1 + t)) * |x|_{V_t^{-1}}`, where
/// `V_t = lambda I + sum x_s x_s^T`.
#[derive(Debug, Clone)]
pub struct GlmUcbPolicy {
    family: GlmFamily,
    s: f64,
    kappa: f64,
    radius_scale: f64,
    mle: MleState,
    design: InverseTracker,
    refits: usize,
    warnings: usize,
}

impl GlmUcbPolicy {
    pub fn new(
        family: GlmFamily,
        d: usize,
        s: f64,
        lambda: f64,
        radius_scale: f64,
    ) -> Result<Self> {
        if !(radius_scale.is_finite() && radius_scale >= 0.0) {
            return Err(Error::Config(format!(
                "radius scale must be non-negative, got {radius_scale}"
            )));
        }
        let kappa = family.bounds(s)?.kappa;
        Ok(Self {
            family,
            s,
            kappa,
            radius_scale,
            mle: MleState::new(d, lambda)?,
            design: InverseTracker::new(PsdMatrix::scaled_identity(d, lambda)?)?,
            refits: 0,
            warnings: 0,
        })
    }

    pub fn mle(&self) -> &MleState {
        &self.mle
    }

    pub fn design(&self) -> &InverseTracker {
        &self.design
    }

    /// Number of fits run so far.
    pub fn refits(&self) -> usize {
        self.refits
    }

    fn radius(&self, t: f64) -> f64 {
        let d = self.mle.theta_hat().len() as f64;
        self.radius_scale * self.kappa * (d * t.ln_1p()).sqrt()
    }

    pub fn score(&self, x: &DVector<f64>, t: f64) -> Result<f64> {
        let mean = self.family.mu(x.dot(self.mle.theta_hat()))?;
        let radius = self.radius(t);
        if radius == 0.0 {
            return Ok(mean);
        }
        Ok(mean + radius * weighted_norm(x, self.design.inverse())?)
    }

    fn current_round(&self) -> f64 {
        (self.mle.len() + 1) as f64
    }
}

impl Policy for GlmUcbPolicy {
    fn name(&self) -> &str {
        "glm-ucb"
    }

    fn select(&self, actions: &[DVector<f64>]) -> Result<Selection> {
        check_actions(actions, self.mle.theta_hat().len())?;
        let t = self.current_round();
        argmax(actions.iter().map(|x| self.score(x, t)))
    }

    fn observe(&mut self, x: &DVector<f64>, r: f64) -> Result<()> {
        check_action(x, self.mle.theta_hat().len())?;
        self.mle.push(x.clone(), r)?;
        self.design.rank1_update(x, 1.0)?;
        let fit = if self.mle.len().is_multiple_of(GLM_UCB_REFIT_EVERY) {
            self.mle.fit(&self.family, self.s)?
        } else {
            self.mle.refit_warm(&self.family, self.s)?
        };
        self.refits += 1;
        if !fit.converged {
            self.warnings += 1;
        }
        Ok(())
    }

    fn beta(&self) -> f64 {
        self.radius(self.current_round())
    }

    fn estimate(&self) -> &DVector<f64> {
        self.mle.theta_hat()
    }

    fn fit_warnings(&self) -> usize {
        self.warnings
    }
}

/// Policy names accepted by [`build_policy`].
pub const POLICY_NAMES: [&str; 3] = ["glb-omd", "glm-ucb", "greedy"];

pub fn build_policy(
    name: &str,
    family: GlmFamily,
    d: usize,
    params: OmdParams,
    radius_scale: f64,
) -> Result<Box<dyn Policy>> {
    Ok(match name {
        "glb-omd" => Box::new(GlbOmdPolicy::new(family, d, params)?),
        "greedy" => Box::new(GlbOmdPolicy::greedy(family, d, params)?),
        "glm-ucb" => Box::new(GlmUcbPolicy::new(
            family,
            d,
            params.s,
            params.lambda,
            radius_scale,
        )?),
        other => return Err(Error::Config(format!("unknown policy `{other}`"))),
    })
}
