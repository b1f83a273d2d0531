//! Small dense positive-definite matrix utilities.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Rank-1 updates between full re-inversions of a tracked inverse.
pub const DEFAULT_REFRESH: usize = 512;

const SYMMETRY_TOL: f64 = 1e-8;

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// A symmetric positive-definite `d x d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdMatrix {
    entries: DMatrix<f64>,
}

impl PsdMatrix {
    /// `lambda * I_d`.
    pub fn scaled_identity(dim: usize, lambda: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Config(format!(
                "regularizer must be positive, got {lambda}"
            )));
        }
        Ok(Self {
            entries: DMatrix::identity(dim, dim) * lambda,
        })
    }

    /// Wraps `m` after checking squareness, symmetry and positive definiteness.
    pub fn from_matrix(mut m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::Contract(format!(
                "matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if max_asymmetry(&m) > SYMMETRY_TOL {
            return Err(Error::Contract("matrix is not symmetric".into()));
        }
        symmetrize(&mut m);
        if m.clone().cholesky().is_none() {
            return Err(Error::Numeric("matrix is not positive definite".into()));
        }
        Ok(Self { entries: m })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.entries
    }

    /// `self += c * v v^T`, followed by symmetrization.
    pub fn add_rank1(&mut self, v: &DVector<f64>, c: f64) {
        self.entries.ger(c, v, v, 1.0);
        symmetrize(&mut self.entries);
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.entries.symmetric_eigenvalues().min()
    }

    /// Fresh inverse through a Cholesky factorization.
    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        let mut inv = self
            .entries
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numeric("matrix lost positive definiteness".into()))?
            .inverse();
        symmetrize(&mut inv);
        Ok(inv)
    }
}

/// Sherman-Morrison: `(A + c v v^T)^{-1}` from `A^{-1}` in `O(d^2)`.
pub fn sherman_morrison(inverse: &DMatrix<f64>, v: &DVector<f64>, c: f64) -> DMatrix<f64> {
    let mut out = inverse.clone();
    let u = inverse * v;
    let denom = 1.0 + c * v.dot(&u);
    out.ger(-c / denom, &u, &u, 1.0);
    symmetrize(&mut out);
    out
}

/// A positive-definite matrix together with its inverse, maintained by
/// rank-1 updates and periodically recomputed from scratch.
#[derive(Debug, Clone)]
pub struct InverseTracker {
    matrix: PsdMatrix,
    inverse: DMatrix<f64>,
    update_count: usize,
    refresh_every: usize,
}

impl InverseTracker {
    pub fn new(matrix: PsdMatrix) -> Result<Self> {
        Self::with_refresh(matrix, DEFAULT_REFRESH)
    }

    /// `refresh_every == 0` disables re-inversion.
    pub fn with_refresh(matrix: PsdMatrix, refresh_every: usize) -> Result<Self> {
        let inverse = matrix.inverse()?;
        Ok(Self {
            matrix,
            inverse,
            update_count: 0,
            refresh_every,
        })
    }

    pub fn matrix(&self) -> &PsdMatrix {
        &self.matrix
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn update_count(&self) -> usize {
        self.update_count
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `A <- A + c v v^T` and the matching inverse update.
    pub fn rank1_update(&mut self, v: &DVector<f64>, c: f64) -> Result<()> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Contract(format!(
                "rank-1 weight must be positive, got {c}"
            )));
        }
        if v.len() != self.dim() {
            return Err(Error::Contract(format!(
                "vector has length {}, expected {}",
                v.len(),
                self.dim()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Contract(
                "rank-1 vector has non-finite entries".into(),
            ));
        }
        self.matrix.add_rank1(v, c);
        self.update_count += 1;
        if self.refresh_every > 0 && self.update_count.is_multiple_of(self.refresh_every) {
            self.inverse = self.matrix.inverse()?;
        } else {
            self.inverse = sherman_morrison(&self.inverse, v, c);
        }
        Ok(())
    }

    /// `max |A A^{-1} - I|`.
    pub fn inverse_residual(&self) -> f64 {
        let n = self.dim();
        let prod = self.matrix.as_matrix() * &self.inverse;
        (prod - DMatrix::<f64>::identity(n, n)).amax()
    }
}

/// `sqrt(v^T M v)`, clamping tiny negative rounding at zero.
pub fn weighted_norm(v: &DVector<f64>, m: &DMatrix<f64>) -> Result<f64> {
    if m.nrows() != v.len() || m.ncols() != v.len() {
        return Err(Error::Contract(format!(
            "vector of length {} against {}x{} matrix",
            v.len(),
            m.nrows(),
            m.ncols()
        )));
    }
    if max_asymmetry(m) > SYMMETRY_TOL {
        return Err(Error::Contract("weighting matrix is not symmetric".into()));
    }
    Ok(m.dot_quadratic(v).max(0.0).sqrt())
}

trait QuadraticForm {
    fn dot_quadratic(&self, v: &DVector<f64>) -> f64;
}

impl QuadraticForm for DMatrix<f64> {
    fn dot_quadratic(&self, v: &DVector<f64>) -> f64 {
        let n = v.len();
        let mut acc = 0.0;
        for j in 0..n {
            let mut col = 0.0;
            for i in 0..n {
                col += self[(i, j)] * v[i];
            }
            acc += col * v[j];
        }
        acc
    }
}

/// Result of projecting onto the Euclidean ball in an `H`-norm.
#[derive(Debug, Clone, PartialEq)]
pub struct BallProjection {
    pub point: DVector<f64>,
    /// KKT multiplier of the norm constraint; zero for interior points.
    pub multiplier: f64,
}

/// `argmin_{|theta|_2 <= S} |theta - zeta|_H^2`.
///
/// Exterior points are solved via `theta(nu) = (H + nu I)^{-1} H zeta` with the
/// multiplier found by bisection on `|theta(nu)|_2 = S` in the eigenbasis of `H`.
pub fn ball_project_hnorm(zeta: &DVector<f64>, h: &PsdMatrix, s: f64) -> Result<BallProjection> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::Config(format!(
            "ball radius must be positive, got {s}"
        )));
    }
    if zeta.len() != h.dim() {
        return Err(Error::Contract(format!(
            "point of length {} against dimension {}",
            zeta.len(),
            h.dim()
        )));
    }
    if zeta.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("projection input is not finite".into()));
    }
    if zeta.norm() <= s {
        return Ok(BallProjection {
            point: zeta.clone(),
            multiplier: 0.0,
        });
    }

    let eig = SymmetricEigen::new(h.as_matrix().clone());
    let lam = &eig.eigenvalues;
    if lam.min() <= 0.0 {
        return Err(Error::Numeric(format!(
            "H is not positive definite (min eigenvalue {})",
            lam.min()
        )));
    }
    // Coordinates of H zeta in the eigenbasis.
    let w = eig.eigenvectors.tr_mul(zeta);
    let hw: Vec<f64> = lam.iter().zip(w.iter()).map(|(l, c)| l * c).collect();
    let norm_at = |nu: f64| -> f64 {
        hw.iter()
            .zip(lam.iter())
            .map(|(a, l)| (a / (l + nu)).powi(2))
            .sum::<f64>()
            .sqrt()
    };

    let mut lo = 0.0f64;
    let mut hi = lam.max().max(1.0);
    while norm_at(hi) >= s {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::Numeric(
                "projection multiplier bracket diverged".into(),
            ));
        }
    }
    while hi - lo > 1e-12 * (1.0 + lo) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if norm_at(mid) > s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let nu = 0.5 * (lo + hi);
    let coords = DVector::from_iterator(
        hw.len(),
        hw.iter().zip(lam.iter()).map(|(a, l)| a / (l + nu)),
    );
    Ok(BallProjection {
        point: &eig.eigenvectors * coords,
        multiplier: nu,
    })
}
