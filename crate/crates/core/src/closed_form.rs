//! Closed-form low-rank representation for a PSD Gram matrix.
//!
//! With `G = U diag(σ) U^T`, the minimizer of
//! `½‖Z G^{1/2} − G^{1/2}‖_F² + λ‖Z‖_*` is `Z* = U diag(d) U^T` where
//! `d_i = 1 − λ/σ_i` for `σ_i > λ` and 0 otherwise. `G` is either the
//! projection-embedding Gram matrix Δ or any kernel matrix.
//!
//! The ½ matters: per eigendirection the objective is
//! `½σ(d − 1)² + λ|d|`, whose minimizer is exactly the shrink rule above.
//! Without it the same rule would need `2λ`.

use crate::error::{Error, Result};
use crate::grassmann::{common_shape, GrassmannPoint};
use crate::kernels::{gram, KernelSpec};
use crate::linalg::{nuclear_norm, sym_eig, Matrix, SymEig};

/// Eigenvalues below this fraction of the largest are treated as zero.
pub const ZERO_EIGEN_CUTOFF: f64 = 1e-12;

/// `Δ_ij = tr[(X_j^T X_i)(X_i^T X_j)]`, the inner products of the projection
/// embeddings.
#[derive(Debug, Clone)]
pub struct DeltaMatrix {
    values: Matrix,
    p: usize,
}

impl DeltaMatrix {
    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    /// Subspace dimension of the points; equals every diagonal entry.
    pub fn subspace_dim(&self) -> usize {
        self.p
    }
}

pub fn build_delta(points: &[GrassmannPoint]) -> Result<DeltaMatrix> {
    if points.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    let (_, p) = common_shape(points)?;
    let n = points.len();
    let mut values = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let ji = points[j].basis().transpose() * points[i].basis();
            let ij = points[i].basis().transpose() * points[j].basis();
            let t = (ji * ij).trace();
            values[(i, j)] = t;
            values[(j, i)] = t;
        }
    }
    Ok(DeltaMatrix { values, p })
}

/// Representation matrix; entry `(j, i)` weights point `j` in the
/// reconstruction of point `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankCoefficients {
    pub z: Matrix,
}

impl LowRankCoefficients {
    pub fn len(&self) -> usize {
        self.z.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.z.nrows() == 0
    }

    /// Number of singular values above `tol * σ_max`.
    pub fn rank(&self, tol: f64) -> usize {
        let s = crate::linalg::singular_values(&self.z);
        match s.first() {
            Some(&top) if top > 0.0 => s.iter().filter(|&&v| v > tol * top).count(),
            _ => 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClosedFormReport {
    pub lambda: f64,
    /// All eigenvalues of the Gram matrix, descending.
    pub eigenvalues: Vec<f64>,
    /// How many eigenvalues exceed λ.
    pub kept_count: usize,
    /// `½‖Z G^{1/2} − G^{1/2}‖_F² + λ‖Z‖_*`.
    pub objective_value: f64,
    /// `½(−2 tr(GZ) + tr(Z G Z^T)) + λ‖Z‖_*`; differs from the above by
    /// the Z-independent `½ tr(G)`.
    pub reduced_objective: f64,
    /// Eigenvalue mass removed by PSD repair of a kernel matrix.
    pub clamp_magnitude: f64,
}

/// `½(tr(G) − 2 tr(ZG) + tr(Z G Z^T)) + λ‖Z‖_*`, which equals
/// `½‖Z G^{1/2} − G^{1/2}‖_F² + λ‖Z‖_*` for symmetric PSD `G`.
pub fn closed_form_objective(g: &Matrix, z: &Matrix, lambda: f64) -> f64 {
    0.5 * g.trace() + reduced_objective(g, z, lambda)
}

pub fn reduced_objective(g: &Matrix, z: &Matrix, lambda: f64) -> f64 {
    let zg = z * g;
    0.5 * (-2.0 * zg.trace() + (&zg * z.transpose()).trace()) + lambda * nuclear_norm(z)
}

/// Solves for many λ from one eigendecomposition.
#[derive(Debug, Clone)]
pub struct ClosedFormSolver {
    gram: Matrix,
    eig: SymEig,
}

impl ClosedFormSolver {
    pub fn new(gram: &Matrix) -> Result<Self> {
        let eig = sym_eig(gram)?;
        Ok(ClosedFormSolver {
            gram: gram.clone(),
            eig,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig.eigenvalues
    }

    pub fn solve(&self, lambda: f64) -> Result<(LowRankCoefficients, ClosedFormReport)> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "lambda must be positive and finite, got {lambda}"
            )));
        }
        let floor = ZERO_EIGEN_CUTOFF * self.eig.max_eigenvalue().max(0.0);
        let shrink = |sigma: f64| {
            let sigma = if sigma < floor { 0.0 } else { sigma };
            if sigma > lambda {
                1.0 - lambda / sigma
            } else {
                0.0
            }
        };
        let kept_count = self
            .eig
            .eigenvalues
            .iter()
            .filter(|&&s| shrink(s) > 0.0)
            .count();
        let z = self.eig.reconstruct_with(shrink);
        let reduced = reduced_objective(&self.gram, &z, lambda);
        let report = ClosedFormReport {
            lambda,
            eigenvalues: self.eig.eigenvalues.clone(),
            kept_count,
            objective_value: 0.5 * self.gram.trace() + reduced,
            reduced_objective: reduced,
            clamp_magnitude: 0.0,
        };
        Ok((LowRankCoefficients { z }, report))
    }
}

pub fn glrr_f_solve(g: &Matrix, lambda: f64) -> Result<(LowRankCoefficients, ClosedFormReport)> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    ClosedFormSolver::new(g)?.solve(lambda)
}

/// Kernelized variant: Gram matrix under `spec`, PSD repair, closed form.
pub fn kglrr_solve(
    points: &[GrassmannPoint],
    spec: KernelSpec,
    lambda: f64,
) -> Result<(LowRankCoefficients, ClosedFormReport)> {
    let k = gram(points, spec)?;
    let (z, mut report) = glrr_f_solve(&k.values, lambda)?;
    report.clamp_magnitude = k.clamp_magnitude;
    Ok((z, report))
}
