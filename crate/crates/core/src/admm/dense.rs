//! Literal d x d x N implementation of the ℓ2/ℓ1 ADMM iteration.
//!
//! Every slice of `X`, `E` and `ξ` is held as a dense d x d matrix and the
//! gradient, norms and stopping quantities are evaluated from their tensor
//! definitions; `‖X‖` is the spectral norm of the mode-3 matricization.
//! Only meant as an oracle for [`super::CoefficientAdmm`] on small inputs.

use super::{mu_update, rho_rule, svt, AdmmConfig, AdmmReport, StepInfo};
use crate::error::{Error, Result};
use crate::grassmann::{common_shape, project_embed, GrassmannPoint};
use crate::linalg::{nuclear_norm, thin_svd, Matrix};

/// Largest allowed `N·d²`.
pub const DENSE_LIMIT: usize = 2_000_000;

#[derive(Debug, Clone)]
pub struct DenseSolution {
    pub z: Matrix,
    pub e_slices: Vec<Matrix>,
    pub report: AdmmReport,
}

#[derive(Debug, Clone)]
pub struct DenseAdmm {
    slices: Vec<Matrix>,
    config: AdmmConfig,
    eta: f64,
    x_norm: f64,
    z: Matrix,
    e: Vec<Matrix>,
    xi: Vec<Matrix>,
    mu: f64,
    iter: usize,
    report: AdmmReport,
}

impl DenseAdmm {
    pub fn new(points: &[GrassmannPoint], config: &AdmmConfig) -> Result<Self> {
        let (d, _) = common_shape(points)?;
        let n = points.len();
        let size = n * d * d;
        if size > DENSE_LIMIT {
            return Err(Error::OracleTooLarge {
                size,
                limit: DENSE_LIMIT,
            });
        }
        let slices: Vec<Matrix> = points.iter().map(project_embed).collect();
        // Mode-3 matricization: row i is vec(B_i).
        let unfolded = Matrix::from_fn(n, d * d, |i, k| slices[i][(k % d, k / d)]);
        let x_norm = thin_svd(&unfolded)?.s[0];
        let eta = config.resolve_eta(x_norm * x_norm)?;
        Ok(DenseAdmm {
            e: vec![Matrix::zeros(d, d); n],
            xi: vec![Matrix::zeros(d, d); n],
            z: Matrix::zeros(n, n),
            mu: config.mu0,
            iter: 0,
            report: AdmmReport {
                eta,
                ..AdmmReport::default()
            },
            slices,
            config: config.clone(),
            eta,
            x_norm,
        })
    }

    pub fn z(&self) -> &Matrix {
        &self.z
    }

    pub fn e_slices(&self) -> &[Matrix] {
        &self.e
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `Σ_j z_ji B_j`.
    fn reconstruct(&self, z: &Matrix, i: usize) -> Matrix {
        let d = self.slices[0].nrows();
        let mut out = Matrix::zeros(d, d);
        for (j, b) in self.slices.iter().enumerate() {
            out += b * z[(j, i)];
        }
        out
    }

    pub fn step(&mut self) -> Result<StepInfo> {
        let n = self.slices.len();
        let mu = self.mu;

        let mut e_next = Vec::with_capacity(n);
        for i in 0..n {
            let c = &self.slices[i] - self.reconstruct(&self.z, i);
            let w = c + &self.xi[i] / mu;
            let m = w.norm();
            e_next.push(if m < 1.0 / mu {
                Matrix::zeros(w.nrows(), w.ncols())
            } else {
                w * (1.0 - 1.0 / (m * mu))
            });
        }

        // ∂f/∂z_ji = −⟨B_j, ξ(i) + μ(B_i − Σ_l z_li B_l − E(i))⟩
        let mut grad = Matrix::zeros(n, n);
        for i in 0..n {
            let r = &self.slices[i] - self.reconstruct(&self.z, i) - &e_next[i];
            let inner = &self.xi[i] + r * mu;
            for j in 0..n {
                grad[(j, i)] = -self.slices[j].dot(&inner);
            }
        }
        let arg = &self.z - grad / (self.eta * mu);
        let z_next = svt(&arg, self.config.lambda / (self.eta * mu))?;
        if z_next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalDivergence {
                iteration: self.iter,
                what: "Z",
            });
        }

        let mut resid_sq = 0.0;
        let mut de_sq = 0.0;
        let mut xi_next = Vec::with_capacity(n);
        for i in 0..n {
            let r = &self.slices[i] - self.reconstruct(&z_next, i) - &e_next[i];
            resid_sq += r.norm_squared();
            de_sq += (&e_next[i] - &self.e[i]).norm_squared();
            xi_next.push(&self.xi[i] + r * mu);
        }
        let dz = (&z_next - &self.z).norm();
        let change = mu / self.x_norm * (self.eta.sqrt() * dz).max(de_sq.sqrt());
        let residual = resid_sq.sqrt() / self.x_norm;

        self.z = z_next;
        self.e = e_next;
        self.xi = xi_next;
        self.mu = mu_update(mu, rho_rule(change, &self.config), self.config.mu_max);
        self.iter += 1;

        let objective = self.e.iter().map(|s| s.norm()).sum::<f64>()
            + self.config.lambda * nuclear_norm(&self.z);
        let info = StepInfo {
            residual,
            change,
            objective,
            mu_used: mu,
            converged: residual <= self.config.eps1 && change <= self.config.eps2,
        };
        self.report.record(&info);
        Ok(info)
    }

    pub fn run(mut self) -> Result<DenseSolution> {
        while self.iter < self.config.max_iters {
            if self.step()?.converged {
                break;
            }
        }
        Ok(DenseSolution {
            z: self.z,
            e_slices: self.e,
            report: self.report,
        })
    }
}

pub fn dense_reference(points: &[GrassmannPoint], config: &AdmmConfig) -> Result<DenseSolution> {
    DenseAdmm::new(points, config)?.run()
}
