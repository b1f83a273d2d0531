//! Parameter estimators: the one-pass mirror-descent learner with its
//! ellipsoidal confidence set, and the regularized maximum-likelihood fit used
//! by the GLM-UCB baseline.

mod mle;
pub(crate) mod omd;

pub use mle::{MleFit, MleState, MLE_GRAD_TOL, MLE_MAX_ITERS};
pub use omd::OmdState;

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::glm::GlmFamily;
use crate::linalg::{weighted_norm, PsdMatrix};

/// How the regularizer is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LambdaMode {
    /// The value required by the coverage guarantee.
    #[default]
    Theory,
    /// `lambda = d`, the setting used for the regret experiments.
    Practical,
}

impl LambdaMode {
    pub fn as_str(self) -> &'static str {
        match self {
            LambdaMode::Theory => "theory",
            LambdaMode::Practical => "practical",
        }
    }
}

impl fmt::Display for LambdaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LambdaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "theory" => Ok(LambdaMode::Theory),
            "practical" => Ok(LambdaMode::Practical),
            other => Err(Error::Config(format!("unknown lambda mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmdParams {
    /// Parameter-norm bound.
    pub s: f64,
    /// Step size.
    pub eta: f64,
    /// Regularizer.
    pub lambda: f64,
    /// Confidence level in `(0, 1]`.
    pub delta: f64,
    pub lambda_mode: LambdaMode,
    /// Supremum of the link slope over `[-S, S]`.
    pub link_sup: f64,
}

/// Step size `eta = 1 + R S` and the regularizer for the chosen mode.
pub fn configure_params(
    family: &GlmFamily,
    d: usize,
    s: f64,
    delta: f64,
    mode: LambdaMode,
) -> Result<OmdParams> {
    if d == 0 {
        return Err(Error::Config("dimension must be at least 1".into()));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Config(format!(
            "delta must lie in (0, 1], got {delta}"
        )));
    }
    let bounds = family.bounds(s)?;
    family.check_assumptions(s)?;
    let r = family.self_concordance();
    let g = family.dispersion();
    let eta = 1.0 + r * s;
    let lambda = match mode {
        LambdaMode::Theory => {
            let curvature = 7.0 * d as f64 * eta * r * r;
            let slope = (3.0 * eta * r * s).max(1.0) * bounds.big_c_mu / g;
            2.0 * curvature.max(slope)
        }
        LambdaMode::Practical => d as f64,
    };
    Ok(OmdParams {
        s,
        eta,
        lambda,
        delta,
        lambda_mode: mode,
        link_sup: bounds.big_c_mu,
    })
}

/// Confidence radius after `t` rounds:
/// `sqrt(4 lambda S^2 + 2 eta ln(1/delta) + 6 d eta^2 ln(2 + 2 C t / (lambda g)))`.
pub fn beta_radius(params: &OmdParams, family: &GlmFamily, d: usize, t: usize) -> f64 {
    let OmdParams {
        s,
        eta,
        lambda,
        delta,
        link_sup,
        ..
    } = *params;
    let g = family.dispersion();
    let growth = (2.0 + 2.0 * link_sup * t as f64 / (lambda * g)).ln();
    (4.0 * lambda * s * s + 2.0 * eta * (1.0 / delta).ln() + 6.0 * d as f64 * eta * eta * growth)
        .sqrt()
}

/// The ellipsoid `{theta : |theta - center|_H <= beta}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceSet {
    pub center: DVector<f64>,
    pub h: PsdMatrix,
    pub beta: f64,
}

impl ConfidenceSet {
    /// Distance of `theta` from the center in the `H`-norm.
    pub fn distance(&self, theta: &DVector<f64>) -> Result<f64> {
        if theta.len() != self.center.len() {
            return Err(Error::Contract(format!(
                "parameter of length {} against set of dimension {}",
                theta.len(),
                self.center.len()
            )));
        }
        weighted_norm(&(theta - &self.center), self.h.as_matrix())
    }

    pub fn contains(&self, theta: &DVector<f64>) -> Result<bool> {
        Ok(self.distance(theta)? <= self.beta)
    }
}
