//! ℓ2/ℓ1 low-rank representation solved by linearized ADMM.
//!
//! The model is
//!
//! ```text
//! min ‖E‖_{ℓ2/ℓ1} + λ‖Z‖_*   s.t.   B_i = Σ_j z_ji B_j + E(i),  B_i = X_i X_i^T
//! ```
//!
//! where `‖E‖_{ℓ2/ℓ1}` sums the Frobenius norms of the slices `E(i)`.
//! Starting from zero, every slice of `E` and of the multiplier `ξ` stays in
//! `span{B_j}`, so each slice is stored as an N-vector of coefficients
//! (column `i` of an N x N matrix) and every Frobenius inner product goes
//! through Δ: `⟨Σ_j a_j B_j, Σ_j b_j B_j⟩ = a^T Δ b`. Memory is O(N²)
//! regardless of the ambient dimension. [`dense`] holds the literal d x d x N
//! implementation used to validate this reduction.

pub mod dense;

use crate::closed_form::{DeltaMatrix, LowRankCoefficients};
use crate::error::{Error, Result};
use crate::linalg::{nuclear_norm, sym_eig, thin_svd, Matrix};

/// Default `η = ETA_MARGIN · σ_max(Δ)`; convergence needs `η > ‖X‖² = σ_max(Δ)`.
pub const ETA_MARGIN: f64 = 1.02;

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmConfig {
    pub lambda: f64,
    pub mu0: f64,
    pub rho0: f64,
    pub mu_max: f64,
    /// `None` picks `ETA_MARGIN · σ_max(Δ)`.
    pub eta: Option<f64>,
    pub eps1: f64,
    pub eps2: f64,
    pub max_iters: usize,
}

impl AdmmConfig {
    pub fn new(lambda: f64) -> Self {
        AdmmConfig {
            lambda,
            mu0: 0.01,
            rho0: 1.9,
            mu_max: 1e10,
            eta: None,
            eps1: 1e-4,
            eps2: 1e-4,
            max_iters: 500,
        }
    }

    /// Checks the config against `‖X‖² = σ_max(Δ)` and returns the η to use.
    pub fn resolve_eta(&self, x_norm_sq: f64) -> Result<f64> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.mu0 > 0.0) {
            return bad(format!("mu0 must be positive, got {}", self.mu0));
        }
        if !(self.rho0 >= 1.0) {
            return bad(format!("rho0 must be >= 1, got {}", self.rho0));
        }
        if !(self.mu_max >= self.mu0) {
            return bad(format!("mu_max {} is below mu0 {}", self.mu_max, self.mu0));
        }
        if !(self.eps1 > 0.0 && self.eps2 > 0.0) {
            return bad("eps1 and eps2 must be positive".into());
        }
        match self.eta {
            None => Ok(ETA_MARGIN * x_norm_sq),
            Some(eta) if eta > x_norm_sq => Ok(eta),
            Some(eta) => bad(format!("eta = {eta} must exceed ||X||^2 = {x_norm_sq}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdmmState {
    pub z: Matrix,
    /// Column `i` holds the coefficients of `E(i)` over `{B_j}`.
    pub e_coef: Matrix,
    /// Same convention for the multiplier slices `ξ(i)`.
    pub xi_coef: Matrix,
    pub mu: f64,
    pub iter: usize,
}

impl AdmmState {
    pub fn zeros(n: usize, mu0: f64) -> Self {
        AdmmState {
            z: Matrix::zeros(n, n),
            e_coef: Matrix::zeros(n, n),
            xi_coef: Matrix::zeros(n, n),
            mu: mu0,
            iter: 0,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct AdmmReport {
    pub iterations: usize,
    pub converged: bool,
    /// `‖X − X×₃Z − E‖ / ‖X‖` after each iteration.
    pub primal_residual_history: Vec<f64>,
    /// `μ^k/‖X‖ · max(√η‖ΔZ‖_F, ‖ΔE‖_F)` after each iteration.
    pub change_history: Vec<f64>,
    /// `‖E‖_{ℓ2/ℓ1} + λ‖Z‖_*` after each iteration.
    pub objective_history: Vec<f64>,
    /// Penalty used by each iteration.
    pub mu_history: Vec<f64>,
    pub eta: f64,
}

/// Per-iteration quantities shared by both implementations.
#[derive(Debug, Clone, Copy)]
pub struct StepInfo {
    pub residual: f64,
    pub change: f64,
    pub objective: f64,
    pub mu_used: f64,
    pub converged: bool,
}

impl AdmmReport {
    fn record(&mut self, info: &StepInfo) {
        self.iterations += 1;
        self.converged = info.converged;
        self.primal_residual_history.push(info.residual);
        self.change_history.push(info.change);
        self.objective_history.push(info.objective);
        self.mu_history.push(info.mu_used);
    }
}

#[derive(Debug, Clone)]
pub struct AdmmSolution {
    pub z: LowRankCoefficients,
    pub e_coef: Matrix,
    pub report: AdmmReport,
}

/// `Δ`-weighted Frobenius norm of a slice tensor given by coefficients.
fn coef_norm(coef: &Matrix, delta: &Matrix) -> f64 {
    (coef.transpose() * delta)
        .component_mul(&coef.transpose())
        .sum()
        .max(0.0)
        .sqrt()
}

/// Frobenius norm of every slice, `sqrt(c_i^T Δ c_i)` per column.
fn slice_norms(coef: &Matrix, delta: &Matrix) -> Vec<f64> {
    let dc = delta * coef;
    (0..coef.ncols())
        .map(|i| coef.column(i).dot(&dc.column(i)).max(0.0).sqrt())
        .collect()
}

/// Slice-wise shrinkage: for each point `i`,
/// `w = (e_i − Z_{:,i}) + ξ_{:,i}/μ`, `M = ‖w‖_Δ`, and the new error slice is
/// 0 when `M < 1/μ`, else `(1 − 1/(Mμ)) w`.
pub fn e_step(z: &Matrix, xi_coef: &Matrix, mu: f64, delta: &Matrix) -> Matrix {
    let n = z.nrows();
    let mut w = Matrix::identity(n, n) - z + xi_coef / mu;
    let norms = slice_norms(&w, delta);
    for (i, m) in norms.into_iter().enumerate() {
        let scale = if m < 1.0 / mu {
            0.0
        } else {
            1.0 - 1.0 / (m * mu)
        };
        w.column_mut(i).scale_mut(scale);
    }
    w
}

/// Gradient of the smooth part of the augmented Lagrangian w.r.t. `Z`:
/// `μΔZ − μ(Δ − Ψ + Φ/μ)^T` with `Φ = Ξ^T Δ`, `Ψ = E^T Δ`.
pub fn smooth_gradient(
    z: &Matrix,
    e_coef: &Matrix,
    xi_coef: &Matrix,
    mu: f64,
    delta: &Matrix,
) -> Matrix {
    let phi = xi_coef.transpose() * delta;
    let psi = e_coef.transpose() * delta;
    (delta * z) * mu - (delta - psi + phi / mu).transpose() * mu
}

/// Linearized proximal step: SVT of `Z − ∇f(Z)/(ημ)` at `λ/(ημ)`.
#[allow(clippy::too_many_arguments)]
pub fn z_step(
    z: &Matrix,
    e_coef: &Matrix,
    xi_coef: &Matrix,
    mu: f64,
    eta: f64,
    lambda: f64,
    delta: &Matrix,
) -> Result<Matrix> {
    let grad = smooth_gradient(z, e_coef, xi_coef, mu, delta);
    let arg = z - grad / (eta * mu);
    svt(&arg, lambda / (eta * mu))
}

/// Singular value thresholding `U max(Σ − τ, 0) V^T`.
pub fn svt(m: &Matrix, tau: f64) -> Result<Matrix> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "SVT threshold must be >= 0, got {tau}"
        )));
    }
    let svd = thin_svd(m)?;
    if svd.s[0] <= tau {
        return Ok(Matrix::zeros(m.nrows(), m.ncols()));
    }
    let mut u = svd.u;
    for (j, s) in svd.s.iter().enumerate() {
        u.column_mut(j).scale_mut((s - tau).max(0.0));
    }
    Ok(u * svd.v.transpose())
}

/// `ρ⁰` when the scaled iterate change is within `eps2`, otherwise 1.
pub fn rho_rule(change: f64, config: &AdmmConfig) -> f64 {
    if change <= config.eps2 {
        config.rho0
    } else {
        1.0
    }
}

pub fn mu_update(mu: f64, rho: f64, mu_max: f64) -> f64 {
    (rho * mu).min(mu_max)
}

fn check_finite(m: &Matrix, iteration: usize, what: &'static str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NumericalDivergence { iteration, what })
    }
}

/// Stepwise coefficient-space solver; [`admm_solve`] drives it to the end.
#[derive(Debug, Clone)]
pub struct CoefficientAdmm {
    delta: Matrix,
    config: AdmmConfig,
    eta: f64,
    x_norm: f64,
    state: AdmmState,
    report: AdmmReport,
}

impl CoefficientAdmm {
    pub fn new(delta: &Matrix, config: &AdmmConfig) -> Result<Self> {
        let sigma_max = sym_eig(delta)?.max_eigenvalue();
        if !(sigma_max > 0.0) {
            return Err(Error::InvalidInput(
                "Gram matrix has no positive eigenvalue".into(),
            ));
        }
        let eta = config.resolve_eta(sigma_max)?;
        let n = delta.nrows();
        Ok(CoefficientAdmm {
            delta: delta.clone(),
            config: config.clone(),
            eta,
            x_norm: sigma_max.sqrt(),
            state: AdmmState::zeros(n, config.mu0),
            report: AdmmReport {
                eta,
                ..AdmmReport::default()
            },
        })
    }

    pub fn state(&self) -> &AdmmState {
        &self.state
    }

    pub fn report(&self) -> &AdmmReport {
        &self.report
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// `‖E‖_{ℓ2/ℓ1} + λ‖Z‖_*` at the current iterate.
    pub fn objective(&self) -> f64 {
        slice_norms(&self.state.e_coef, &self.delta)
            .iter()
            .sum::<f64>()
            + self.config.lambda * nuclear_norm(&self.state.z)
    }

    pub fn step(&mut self) -> Result<StepInfo> {
        let k = self.state.iter;
        let mu = self.state.mu;
        let delta = &self.delta;
        let n = delta.nrows();

        let e_next = e_step(&self.state.z, &self.state.xi_coef, mu, delta);
        check_finite(&e_next, k, "E")?;
        let z_next = z_step(
            &self.state.z,
            &e_next,
            &self.state.xi_coef,
            mu,
            self.eta,
            self.config.lambda,
            delta,
        )?;
        check_finite(&z_next, k, "Z")?;
        let residual = Matrix::identity(n, n) - &z_next - &e_next;
        let xi_next = &self.state.xi_coef + &residual * mu;
        check_finite(&xi_next, k, "multiplier")?;

        let dz = (&z_next - &self.state.z).norm();
        let de = coef_norm(&(&e_next - &self.state.e_coef), delta);
        let change = mu / self.x_norm * (self.eta.sqrt() * dz).max(de);
        let primal = coef_norm(&residual, delta) / self.x_norm;

        self.state = AdmmState {
            z: z_next,
            e_coef: e_next,
            xi_coef: xi_next,
            mu: mu_update(mu, rho_rule(change, &self.config), self.config.mu_max),
            iter: k + 1,
        };
        let info = StepInfo {
            residual: primal,
            change,
            objective: self.objective(),
            mu_used: mu,
            converged: primal <= self.config.eps1 && change <= self.config.eps2,
        };
        self.report.record(&info);
        Ok(info)
    }

    pub fn run(mut self) -> Result<AdmmSolution> {
        while self.state.iter < self.config.max_iters {
            if self.step()?.converged {
                break;
            }
        }
        Ok(self.into_solution())
    }

    pub fn into_solution(self) -> AdmmSolution {
        AdmmSolution {
            z: LowRankCoefficients { z: self.state.z },
            e_coef: self.state.e_coef,
            report: self.report,
        }
    }
}

/// Runs until both stopping rules hold or `max_iters` is reached; in the
/// latter case the last iterate is returned with `converged = false`.
pub fn admm_solve(delta: &DeltaMatrix, config: &AdmmConfig) -> Result<AdmmSolution> {
    CoefficientAdmm::new(delta.values(), config)?.run()
}
