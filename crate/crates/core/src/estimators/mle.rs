use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::glm::GlmFamily;
use crate::linalg::{ball_project_hnorm, PsdMatrix};

/// Projected-gradient norm at which a fit counts as converged.
pub const MLE_GRAD_TOL: f64 = 1e-8;
pub const MLE_MAX_ITERS: usize = 100;

/// Outcome of a regularized maximum-likelihood fit.
#[derive(Debug, Clone, PartialEq)]
pub struct MleFit {
    pub theta: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Projected-gradient norm at `theta`.
    pub stationarity: f64,
}

/// Full observation history plus the current fit.
#[derive(Debug, Clone)]
pub struct MleState {
    actions: Vec<DVector<f64>>,
    rewards: Vec<f64>,
    lambda: f64,
    theta_hat: DVector<f64>,
}

impl MleState {
    pub fn new(d: usize, lambda: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Config(format!(
                "regularizer must be positive, got {lambda}"
            )));
        }
        Ok(Self {
            actions: Vec::new(),
            rewards: Vec::new(),
            lambda,
            theta_hat: DVector::zeros(d),
        })
    }

    pub fn push(&mut self, x: DVector<f64>, r: f64) -> Result<()> {
        if x.len() != self.theta_hat.len() {
            return Err(Error::Contract(format!(
                "action has length {}, expected {}",
                x.len(),
                self.theta_hat.len()
            )));
        }
        if !r.is_finite() {
            return Err(Error::Contract(format!("reward must be finite, got {r}")));
        }
        self.actions.push(x);
        self.rewards.push(r);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn theta_hat(&self) -> &DVector<f64> {
        &self.theta_hat
    }

    pub fn history(&self) -> impl Iterator<Item = (&DVector<f64>, f64)> {
        self.actions.iter().zip(self.rewards.iter().copied())
    }

    /// `sum_s loss_s(theta) + lambda |theta|^2`.
    pub fn objective(&self, family: &GlmFamily, theta: &DVector<f64>) -> Result<f64> {
        let mut total = self.lambda * theta.norm_squared();
        for (x, r) in self.history() {
            total += family.nll_loss(x.dot(theta), r)?;
        }
        Ok(total)
    }

    fn gradient_hessian(
        &self,
        family: &GlmFamily,
        theta: &DVector<f64>,
    ) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let d = theta.len();
        let mut grad = theta * (2.0 * self.lambda);
        let mut hess = DMatrix::<f64>::identity(d, d) * (2.0 * self.lambda);
        for (x, r) in self.history() {
            let z = x.dot(theta);
            grad.axpy(family.nll_grad(z, r)?, x, 1.0);
            hess.ger(family.nll_curvature(z)?, x, x, 1.0);
        }
        Ok((grad, hess))
    }

    /// Fit from the origin.
    pub fn fit(&mut self, family: &GlmFamily, s: f64) -> Result<MleFit> {
        let start = DVector::zeros(self.theta_hat.len());
        self.fit_from(family, s, start)
    }

    /// Fit warm-started at the previous estimate.
    pub fn refit_warm(&mut self, family: &GlmFamily, s: f64) -> Result<MleFit> {
        let start = self.theta_hat.clone();
        self.fit_from(family, s, start)
    }

    /// Damped projected Newton on the ball `|theta| <= S`: each step solves the
    /// local quadratic model over the ball exactly, then backtracks along the
    /// segment to the model minimizer.
    fn fit_from(&mut self, family: &GlmFamily, s: f64, start: DVector<f64>) -> Result<MleFit> {
        let mut theta = clamp_to_ball(start, s);
        let mut value = self.objective(family, &theta)?;
        let mut iterations = 0;
        let mut stationarity = f64::INFINITY;
        let mut converged = false;

        while iterations < MLE_MAX_ITERS {
            let (grad, hess) = self.gradient_hessian(family, &theta)?;
            stationarity = (&theta - clamp_to_ball(&theta - &grad, s)).norm();
            if stationarity <= MLE_GRAD_TOL {
                converged = true;
                break;
            }
            iterations += 1;
            let hess = PsdMatrix::from_matrix(hess)?;
            let newton = hess
                .as_matrix()
                .clone()
                .cholesky()
                .ok_or_else(|| Error::Numeric("MLE Hessian is not positive definite".into()))?
                .solve(&grad);
            let target = ball_project_hnorm(&(&theta - newton), &hess, s)?.point;
            let dir = target - &theta;
            let slope = grad.dot(&dir);
            if -slope <= 1e-12 * (1.0 + value.abs()) {
                // Decrease below the rounding level of the objective: full step.
                theta = &theta + dir;
                value = self.objective(family, &theta)?;
                continue;
            }

            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..50 {
                let cand = &theta + &dir * step;
                let v = self.objective(family, &cand)?;
                if v <= value + 1e-4 * step * slope {
                    accepted = Some((cand, v));
                    break;
                }
                step *= 0.5;
            }
            match accepted {
                Some((cand, v)) => {
                    theta = cand;
                    value = v;
                }
                // No decrease left at working precision.
                None => break,
            }
        }
        if !converged && stationarity > MLE_GRAD_TOL {
            let (grad, _) = self.gradient_hessian(family, &theta)?;
            stationarity = (&theta - clamp_to_ball(&theta - &grad, s)).norm();
            converged = stationarity <= MLE_GRAD_TOL;
        }
        self.theta_hat = theta.clone();
        Ok(MleFit {
            theta,
            iterations,
            converged,
            stationarity,
        })
    }
}

fn clamp_to_ball(v: DVector<f64>, s: f64) -> DVector<f64> {
    let n = v.norm();
    if n > s {
        v * (s / n)
    } else {
        v
    }
}
