//! Generalized linear model families.
//!
//! Each family is a canonical exponential family with cumulant `m`, link
//! `mu = m'`, and dispersion `g(tau)`. The reward given natural parameter `z`
//! has mean `mu(z)` and variance `g(tau) * mu'(z)`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Bernoulli, Distribution, Normal, Poisson};

use crate::error::{Error, Result};

/// Above this margin the logistic cumulant switches to `z + ln(1 + e^-z)`.
const CUMULANT_SWITCH: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyKind {
    Logistic,
    Poisson,
    Gaussian,
}

impl FamilyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FamilyKind::Logistic => "logistic",
            FamilyKind::Poisson => "poisson",
            FamilyKind::Gaussian => "gaussian",
        }
    }
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "logistic" | "bernoulli" => Ok(FamilyKind::Logistic),
            "poisson" => Ok(FamilyKind::Poisson),
            "gaussian" | "normal" => Ok(FamilyKind::Gaussian),
            other => Err(Error::Config(format!("unknown family `{other}`"))),
        }
    }
}

/// A link-function bundle plus its reward sampler. Immutable once built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlmFamily {
    kind: FamilyKind,
    dispersion: f64,
}

/// Curvature extrema of the link over the margin interval `[-S, S]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyBounds {
    pub s: f64,
    /// Infimum of `mu'` over `[-S, S]`.
    pub c_mu: f64,
    /// Supremum of `mu'` over `[-S, S]`.
    pub big_c_mu: f64,
    /// `1 / c_mu`.
    pub kappa: f64,
}

fn finite(z: f64, what: &str) -> Result<f64> {
    if z.is_finite() {
        Ok(z)
    } else {
        Err(Error::Domain(format!("{what} must be finite, got {z}")))
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl GlmFamily {
    pub fn logistic() -> Self {
        Self {
            kind: FamilyKind::Logistic,
            dispersion: 1.0,
        }
    }

    pub fn poisson() -> Self {
        Self {
            kind: FamilyKind::Poisson,
            dispersion: 1.0,
        }
    }

    /// Gaussian family with noise variance `variance` (the dispersion).
    pub fn gaussian(variance: f64) -> Result<Self> {
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::Config(format!(
                "gaussian variance must be positive, got {variance}"
            )));
        }
        Ok(Self {
            kind: FamilyKind::Gaussian,
            dispersion: variance,
        })
    }

    /// Builds a family from its name. Only the Gaussian family accepts a
    /// dispersion other than 1.
    pub fn from_name(name: &str, dispersion: Option<f64>) -> Result<Self> {
        let kind: FamilyKind = name.parse()?;
        match (kind, dispersion) {
            (FamilyKind::Gaussian, d) => Self::gaussian(d.unwrap_or(1.0)),
            (_, Some(d)) if d != 1.0 => Err(Error::Config(format!(
                "{kind} family has fixed dispersion 1, got {d}"
            ))),
            (FamilyKind::Logistic, _) => Ok(Self::logistic()),
            (FamilyKind::Poisson, _) => Ok(Self::poisson()),
        }
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.as_str()
    }

    /// The dispersion `g(tau)`.
    pub fn dispersion(&self) -> f64 {
        self.dispersion
    }

    /// Self-concordance constant `R` with `|mu''| <= R mu'`.
    pub fn self_concordance(&self) -> f64 {
        match self.kind {
            FamilyKind::Logistic | FamilyKind::Poisson => 1.0,
            FamilyKind::Gaussian => 0.0,
        }
    }

    pub fn mu(&self, z: f64) -> Result<f64> {
        let z = finite(z, "margin")?;
        Ok(match self.kind {
            FamilyKind::Logistic => sigmoid(z),
            FamilyKind::Poisson => z.exp(),
            FamilyKind::Gaussian => z,
        })
    }

    pub fn mu_prime(&self, z: f64) -> Result<f64> {
        let z = finite(z, "margin")?;
        Ok(match self.kind {
            FamilyKind::Logistic => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
            FamilyKind::Poisson => z.exp(),
            FamilyKind::Gaussian => 1.0,
        })
    }

    pub fn mu_second(&self, z: f64) -> Result<f64> {
        let z = finite(z, "margin")?;
        Ok(match self.kind {
            FamilyKind::Logistic => {
                let s = sigmoid(z);
                s * (1.0 - s) * (1.0 - 2.0 * s)
            }
            FamilyKind::Poisson => z.exp(),
            FamilyKind::Gaussian => 0.0,
        })
    }

    /// The cumulant (log-partition) `m(z)`.
    pub fn cumulant(&self, z: f64) -> Result<f64> {
        let z = finite(z, "margin")?;
        Ok(match self.kind {
            FamilyKind::Logistic if z > CUMULANT_SWITCH => z + (-z).exp().ln_1p(),
            FamilyKind::Logistic => z.exp().ln_1p(),
            FamilyKind::Poisson => z.exp(),
            FamilyKind::Gaussian => 0.5 * z * z,
        })
    }

    /// `mu'` expressed through the mean `mu(z)` instead of `z`.
    pub fn mu_prime_at_mean(&self, mean: f64) -> f64 {
        match self.kind {
            FamilyKind::Logistic => mean * (1.0 - mean),
            FamilyKind::Poisson => mean,
            FamilyKind::Gaussian => 1.0,
        }
    }

    /// Closed-form extrema of `mu'` over `[-S, S]`.
    pub fn bounds(&self, s: f64) -> Result<FamilyBounds> {
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::Config(format!(
                "parameter bound S must be positive, got {s}"
            )));
        }
        let (c_mu, big_c_mu) = match self.kind {
            // mu' is even and peaks at 0.
            FamilyKind::Logistic => (self.mu_prime(s)?, 0.25),
            FamilyKind::Poisson => ((-s).exp(), s.exp()),
            FamilyKind::Gaussian => (1.0, 1.0),
        };
        Ok(FamilyBounds {
            s,
            c_mu,
            big_c_mu,
            kappa: 1.0 / c_mu,
        })
    }

    /// Checks strict monotonicity and self-concordance of the link on a grid
    /// over `[-S, S]`.
    pub fn check_assumptions(&self, s: f64) -> Result<()> {
        const GRID: usize = 2001;
        let r = self.self_concordance();
        for i in 0..GRID {
            let z = -s + 2.0 * s * i as f64 / (GRID - 1) as f64;
            let d1 = self.mu_prime(z)?;
            if d1.is_nan() || d1 <= 0.0 {
                return Err(Error::Config(format!(
                    "{} link is not strictly increasing at z={z} (mu'={d1})",
                    self.name()
                )));
            }
            let d2 = self.mu_second(z)?;
            if d2.abs() > r * d1 + 1e-12 {
                return Err(Error::Config(format!(
                    "{} link violates self-concordance at z={z}",
                    self.name()
                )));
            }
        }
        Ok(())
    }

    /// Draws a reward with natural parameter `z`.
    pub fn sample_reward<R: Rng + ?Sized>(&self, z: f64, rng: &mut R) -> Result<f64> {
        let mean = self.mu(z)?;
        Ok(match self.kind {
            FamilyKind::Logistic => {
                let b = Bernoulli::new(mean).map_err(|e| Error::Numeric(e.to_string()))?;
                if b.sample(rng) {
                    1.0
                } else {
                    0.0
                }
            }
            FamilyKind::Poisson => {
                let p = Poisson::new(mean).map_err(|e| Error::Numeric(e.to_string()))?;
                p.sample(rng)
            }
            FamilyKind::Gaussian => {
                let n = Normal::new(mean, self.dispersion.sqrt())
                    .map_err(|e| Error::Numeric(e.to_string()))?;
                n.sample(rng)
            }
        })
    }

    /// Negative log-likelihood `(m(z) - r z) / g(tau)` up to the base measure.
    pub fn nll_loss(&self, z: f64, r: f64) -> Result<f64> {
        let r = finite(r, "reward")?;
        Ok((self.cumulant(z)? - r * z) / self.dispersion)
    }

    /// Derivative of [`nll_loss`](Self::nll_loss) in `z`.
    pub fn nll_grad(&self, z: f64, r: f64) -> Result<f64> {
        let r = finite(r, "reward")?;
        Ok((self.mu(z)? - r) / self.dispersion)
    }

    /// Second derivative of [`nll_loss`](Self::nll_loss) in `z`.
    pub fn nll_curvature(&self, z: f64) -> Result<f64> {
        Ok(self.mu_prime(z)? / self.dispersion)
    }
}
