//! Generalized linear bandits with a one-pass online mirror descent estimator.
//!
//! The learner keeps an estimate `theta_t`, a local-curvature matrix `H_t` and
//! its inverse, and selects arms optimistically over the ellipsoid
//! `{theta : |theta - theta_t|_{H_t} <= beta_t}`. Every round costs
//! `O(d^3 + d^2 K)` regardless of the horizon. A maximum-likelihood GLM-UCB
//! baseline and a seeded simulation harness are included for comparison.

pub mod env;
pub mod error;
pub mod estimators;
pub mod glm;
pub mod harness;
pub mod linalg;
pub mod policies;

pub use error::{Error, Result};
