//! Points on the Grassmann manifold G(p, d) and their projection embedding.

use crate::error::{Error, Result};
use crate::linalg::{max_abs_diff, thin_svd, Matrix};

/// `max |X^T X - I|` allowed for a basis.
pub const ORTHONORMAL_TOL: f64 = 1e-10;
/// Relative cutoff on singular values when extracting a basis.
pub const RANK_CUTOFF: f64 = 1e-12;

/// A p-dimensional subspace of R^d stored as a d x p orthonormal basis.
///
/// Any basis of the same span represents the same point; everything this
/// crate computes from a point is invariant to that choice.
#[derive(Debug, Clone, PartialEq)]
pub struct GrassmannPoint {
    basis: Matrix,
}

impl GrassmannPoint {
    /// Wraps an existing basis after checking orthonormality.
    pub fn new(basis: Matrix) -> Result<Self> {
        let (d, p) = basis.shape();
        if p == 0 || p > d {
            return Err(Error::InvalidInput(format!(
                "basis must satisfy 1 <= p <= d, got {d}x{p}"
            )));
        }
        if basis.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("basis has non-finite entries".into()));
        }
        let err = max_abs_diff(&(basis.transpose() * &basis), &Matrix::identity(p, p));
        if err > ORTHONORMAL_TOL {
            return Err(Error::InvalidInput(format!(
                "basis is not orthonormal: max |X^T X - I| = {err:e}"
            )));
        }
        Ok(GrassmannPoint { basis })
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn into_basis(self) -> Matrix {
        self.basis
    }

    /// Ambient dimension d.
    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Subspace dimension p.
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// `X1^T X2`, the p x p cross product every kernel is built from.
    pub fn cross(&self, other: &GrassmannPoint) -> Result<Matrix> {
        check_compatible(self, other)?;
        Ok(self.basis.transpose() * &other.basis)
    }
}

pub(crate) fn check_compatible(a: &GrassmannPoint, b: &GrassmannPoint) -> Result<()> {
    if a.ambient_dim() != b.ambient_dim() || a.dim() != b.dim() {
        return Err(Error::InvalidInput(format!(
            "points live on different manifolds: G({}, {}) vs G({}, {})",
            a.dim(),
            a.ambient_dim(),
            b.dim(),
            b.ambient_dim()
        )));
    }
    Ok(())
}

/// Checks that all points share `d` and `p`, returning them.
pub fn common_shape(points: &[GrassmannPoint]) -> Result<(usize, usize)> {
    let first = points
        .first()
        .ok_or_else(|| Error::InvalidInput("empty point set".into()))?;
    for pt in &points[1..] {
        check_compatible(first, pt)?;
    }
    Ok((first.ambient_dim(), first.dim()))
}

/// The first `p` left singular vectors of `m`.
pub fn orthonormalize(m: &Matrix, p: usize) -> Result<GrassmannPoint> {
    let (d, q) = m.shape();
    if p == 0 || p > d.min(q) {
        return Err(Error::InvalidInput(format!(
            "cannot extract a {p}-dimensional basis from a {d}x{q} matrix"
        )));
    }
    let svd = thin_svd(m)?;
    let top = svd.s[0];
    let achieved = svd.s.iter().filter(|&&s| s > RANK_CUTOFF * top).count();
    if top == 0.0 || achieved < p {
        return Err(Error::RankDeficient {
            needed: p,
            achieved: if top == 0.0 { 0 } else { achieved },
        });
    }
    Ok(GrassmannPoint {
        basis: svd.u.columns(0, p).into_owned(),
    })
}

/// `Π(X) = X X^T`, the d x d orthogonal projector onto span(X).
pub fn project_embed(x: &GrassmannPoint) -> Matrix {
    &x.basis * x.basis.transpose()
}

/// `‖Π(X1) − Π(X2)‖_F`, evaluated without forming d x d matrices.
///
/// `‖Π(X1) − Π(X2)‖_F² = ‖(I − Π(X1))X2‖_F² + ‖(I − Π(X2))X1‖_F²`; the
/// residual form avoids the cancellation in `2p − 2‖X1^T X2‖_F²` when the
/// subspaces nearly coincide, and summing both orders makes it exactly
/// symmetric.
pub fn grassmann_distance(x1: &GrassmannPoint, x2: &GrassmannPoint) -> Result<f64> {
    let cross = x1.cross(x2)?;
    let r12 = &x2.basis - &x1.basis * &cross;
    let r21 = &x1.basis - &x2.basis * cross.transpose();
    Ok((r12.norm_squared() + r21.norm_squared()).sqrt())
}
