use nalgebra::DVector;

use super::{beta_radius, ConfidenceSet, OmdParams};
use crate::error::{Error, Result};
use crate::glm::GlmFamily;
use crate::linalg::{ball_project_hnorm, sherman_morrison, InverseTracker, PsdMatrix};

/// Actions may exceed the unit ball by this much before being rejected.
pub(crate) const ACTION_NORM_SLACK: f64 = 1e-9;

/// State of the one-pass online mirror descent learner.
///
/// Each update minimizes a quadratic surrogate of the current loss plus a
/// proximal term in the accumulated local-curvature norm `H_t`, restricted to
/// the ball `|theta| <= S`.
#[derive(Debug, Clone)]
pub struct OmdState {
    family: GlmFamily,
    params: OmdParams,
    theta: DVector<f64>,
    h: InverseTracker,
    t: usize,
}

impl OmdState {
    /// `theta_1 = 0`, `H_1 = lambda I`.
    pub fn new(family: GlmFamily, d: usize, params: OmdParams) -> Result<Self> {
        let h = InverseTracker::new(PsdMatrix::scaled_identity(d, params.lambda)?)?;
        Ok(Self {
            family,
            params,
            theta: DVector::zeros(d),
            h,
            t: 1,
        })
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    pub fn h(&self) -> &PsdMatrix {
        self.h.matrix()
    }

    pub fn tracker(&self) -> &InverseTracker {
        &self.h
    }

    /// 1-based index of the next round.
    pub fn round(&self) -> usize {
        self.t
    }

    pub fn params(&self) -> &OmdParams {
        &self.params
    }

    pub fn family(&self) -> &GlmFamily {
        &self.family
    }

    pub fn beta(&self) -> f64 {
        beta_radius(&self.params, &self.family, self.dim(), self.t)
    }

    pub fn confidence_set(&self) -> ConfidenceSet {
        ConfidenceSet {
            center: self.theta.clone(),
            h: self.h.matrix().clone(),
            beta: self.beta(),
        }
    }

    pub(crate) fn set_theta(&mut self, theta: DVector<f64>) {
        self.theta = theta;
    }

    /// Processes the observation `(x, r)` of the current round.
    ///
    /// Gradient and curvature of the loss are taken at `theta_t`; the matrix
    /// `H` then accumulates the curvature at the new estimate `theta_{t+1}`.
    pub fn update(&mut self, x: &DVector<f64>, r: f64) -> Result<()> {
        check_action(x, self.dim())?;
        if !r.is_finite() {
            return Err(Error::Contract(format!("reward must be finite, got {r}")));
        }
        let eta = self.params.eta;
        let z = x.dot(&self.theta);
        let grad_scale = self.family.nll_grad(z, r)?;
        let curvature = self.family.nll_curvature(z)?;

        if grad_scale != 0.0 && x.iter().any(|v| *v != 0.0) {
            // H~ = H + eta * mu'(z)/g * x x^T and its inverse.
            let step_weight = eta * curvature;
            let h_tilde_inv = sherman_morrison(self.h.inverse(), x, step_weight);
            let zeta = &self.theta - (&h_tilde_inv * x) * (eta * grad_scale);
            let mut h_tilde = self.h.matrix().clone();
            h_tilde.add_rank1(x, step_weight);
            self.theta = ball_project_hnorm(&zeta, &h_tilde, self.params.s)?.point;
        }

        let weight = self.family.nll_curvature(x.dot(&self.theta))?;
        if weight > 0.0 {
            self.h.rank1_update(x, weight)?;
        }
        self.t += 1;
        Ok(())
    }
}

pub(crate) fn check_action(x: &DVector<f64>, d: usize) -> Result<()> {
    if x.len() != d {
        return Err(Error::Contract(format!(
            "action has length {}, expected {d}",
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract("action has non-finite entries".into()));
    }
    let n = x.norm();
    if n > 1.0 + ACTION_NORM_SLACK {
        return Err(Error::Contract(format!("action norm {n} exceeds 1")));
    }
    Ok(())
}
