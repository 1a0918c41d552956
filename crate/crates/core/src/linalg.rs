//! Dense decompositions used throughout the crate.
//!
//! Both decompositions are backed by `nalgebra` and post-processed into a
//! canonical form: values sorted descending and each singular vector or
//! eigenvector signed so its largest-magnitude entry is positive (lowest
//! index wins a tie). Every quantity consumed downstream is invariant to
//! these choices, but fixing them keeps runs bit-stable.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

/// Largest tolerated asymmetry `max|A - A^T|` for [`sym_eig`].
pub const SYMMETRY_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct ThinSvd {
    /// m x r, orthonormal columns.
    pub u: Matrix,
    /// r singular values, descending.
    pub s: Vec<f64>,
    /// n x r, orthonormal columns.
    pub v: Matrix,
}

impl ThinSvd {
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for (j, sigma) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(*sigma);
        }
        us * self.v.transpose()
    }
}

#[derive(Debug, Clone)]
pub struct SymEig {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Column `i` pairs with `eigenvalues[i]`.
    pub eigenvectors: Matrix,
}

impl SymEig {
    /// `U f(D) U^T` for a spectral function `f`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Matrix {
        let n = self.eigenvectors.nrows();
        let mut scaled = self.eigenvectors.clone();
        for (j, lambda) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(j).scale_mut(f(*lambda));
        }
        let out = scaled * self.eigenvectors.transpose();
        symmetrize(&out, n)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }
}

fn symmetrize(m: &Matrix, n: usize) -> Matrix {
    Matrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
}

pub fn ensure_finite(m: &Matrix, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{what} has non-finite entries"
        )))
    }
}

/// Flip column `j` of `primary` (and of `partner`, if given) so the
/// largest-magnitude entry of `primary`'s column is positive.
fn canonical_sign(primary: &mut Matrix, partner: Option<&mut Matrix>, j: usize) {
    let mut best = 0usize;
    let mut best_abs = -1.0;
    for (i, v) in primary.column(j).iter().enumerate() {
        if v.abs() > best_abs {
            best_abs = v.abs();
            best = i;
        }
    }
    if primary[(best, j)] < 0.0 {
        primary.column_mut(j).neg_mut();
        if let Some(p) = partner {
            p.column_mut(j).neg_mut();
        }
    }
}

fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

fn permute_columns(m: &Matrix, order: &[usize]) -> Matrix {
    Matrix::from_fn(m.nrows(), order.len(), |i, j| m[(i, order[j])])
}

/// Relative residual above which a factorization is rejected.
const SVD_CHECK_TOL: f64 = 1e-10;
const JACOBI_MAX_SWEEPS: usize = 100;

fn svd_is_accurate(m: &Matrix, u: &Matrix, s: &[f64], v: &Matrix) -> bool {
    let r = s.len();
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let mut us = u.clone();
    for (j, sj) in s.iter().enumerate() {
        us.column_mut(j).scale_mut(*sj);
    }
    let eye = Matrix::identity(r, r);
    (us * v.transpose() - m).norm() <= SVD_CHECK_TOL * scale
        && (u.transpose() * u - &eye).norm() <= SVD_CHECK_TOL * r as f64
        && (v.transpose() * v - &eye).norm() <= SVD_CHECK_TOL * r as f64
}

fn nalgebra_svd(m: &Matrix) -> (Matrix, Vec<f64>, Matrix) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested V^T").transpose();
    (u, svd.singular_values.iter().copied().collect(), v)
}

/// Fill columns of `q` flagged in `null` with unit vectors orthogonal to
/// every other column, taking the unit basis vector with the largest
/// residual each time.
fn complete_basis(q: &mut Matrix, null: &[bool]) {
    let rows = q.nrows();
    for j in 0..q.ncols() {
        if !null[j] {
            continue;
        }
        let mut best = Matrix::zeros(rows, 1);
        let mut best_norm = -1.0;
        for e in 0..rows {
            let mut c = Matrix::zeros(rows, 1);
            c[(e, 0)] = 1.0;
            for _ in 0..2 {
                for k in 0..q.ncols() {
                    if k != j && (!null[k] || k < j) {
                        let dot = q.column(k).dot(&c.column(0));
                        c.column_mut(0).axpy(-dot, &q.column(k), 1.0);
                    }
                }
            }
            let norm = c.norm();
            if norm > best_norm {
                best_norm = norm;
                best = c;
            }
        }
        q.set_column(j, &(best.column(0) / best_norm));
    }
}

/// One-sided (Hestenes) Jacobi SVD of a tall matrix.
fn jacobi_svd_tall(m: &Matrix) -> (Matrix, Vec<f64>, Matrix) {
    let n = m.ncols();
    let mut u = m.clone();
    let mut v = Matrix::identity(n, n);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = u.column(i).norm_squared();
                let beta = u.column(j).norm_squared();
                let gamma = u.column(i).dot(&u.column(j));
                if gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for q in [&mut u, &mut v] {
                    for r in 0..q.nrows() {
                        let (a, b) = (q[(r, i)], q[(r, j)]);
                        q[(r, i)] = c * a - s * b;
                        q[(r, j)] = s * a + c * b;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let s: Vec<f64> = (0..n).map(|j| u.column(j).norm()).collect();
    let cutoff = s.iter().fold(0.0f64, |a, &b| a.max(b)) * n as f64 * f64::EPSILON;
    let null: Vec<bool> = s.iter().map(|&x| x <= cutoff || x == 0.0).collect();
    for j in 0..n {
        if !null[j] {
            u.column_mut(j).unscale_mut(s[j]);
        }
    }
    complete_basis(&mut u, &null);
    (u, s, v)
}

fn jacobi_svd(m: &Matrix) -> (Matrix, Vec<f64>, Matrix) {
    if m.nrows() >= m.ncols() {
        jacobi_svd_tall(m)
    } else {
        let (u, s, v) = jacobi_svd_tall(&m.transpose());
        (v, s, u)
    }
}

/// Thin SVD. `nalgebra`'s result is checked for reconstruction and
/// orthogonality; on rank-deficient inputs it is occasionally wrong, in
/// which case the transpose and then a Jacobi SVD are tried.
pub fn thin_svd(m: &Matrix) -> Result<ThinSvd> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Err(Error::InvalidInput("SVD of an empty matrix".into()));
    }
    ensure_finite(m, "SVD input")?;
    let (u, s, v) = {
        let direct = nalgebra_svd(m);
        if svd_is_accurate(m, &direct.0, &direct.1, &direct.2) {
            direct
        } else {
            let (vt, s, ut) = nalgebra_svd(&m.transpose());
            if svd_is_accurate(m, &ut, &s, &vt) {
                (ut, s, vt)
            } else {
                jacobi_svd(m)
            }
        }
    };
    let s: Vec<f64> = s.iter().map(|v| v.max(0.0)).collect();
    let order = descending_order(&s);
    let mut u = permute_columns(&u, &order);
    let mut v = permute_columns(&v, &order);
    let s = order.iter().map(|&k| s[k]).collect::<Vec<_>>();
    for j in 0..s.len() {
        canonical_sign(&mut u, Some(&mut v), j);
    }
    Ok(ThinSvd { u, s, v })
}

/// Descending singular values; NaN-filled for non-finite input, empty for
/// an empty matrix.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    match thin_svd(m) {
        Ok(svd) => svd.s,
        Err(_) => vec![f64::NAN; m.nrows().min(m.ncols())],
    }
}

pub fn sym_eig(a: &Matrix) -> Result<SymEig> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "symmetric eigendecomposition needs a non-empty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    ensure_finite(a, "eigen input")?;
    let asym = max_asymmetry(a);
    if asym > SYMMETRY_TOL {
        return Err(Error::InvalidInput(format!(
            "matrix is not symmetric: max |A - A^T| = {asym:e}"
        )));
    }
    let sym = symmetrize(a, n);
    let eig = SymmetricEigen::new(sym);
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let order = descending_order(&values);
    let mut vectors = permute_columns(&eig.eigenvectors, &order);
    for j in 0..n {
        canonical_sign(&mut vectors, None, j);
    }
    Ok(SymEig {
        eigenvalues: order.iter().map(|&k| values[k]).collect(),
        eigenvectors: vectors,
    })
}

pub fn max_asymmetry(a: &Matrix) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst
}

/// Sum of singular values.
pub fn nuclear_norm(m: &Matrix) -> f64 {
    singular_values(m).iter().sum()
}

/// `max |a_ij - b_ij|`.
pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
