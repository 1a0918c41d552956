//! From a coefficient matrix to cluster labels: affinity, normalized-cuts
//! spectral embedding, k-means.

mod kmeans;

pub use kmeans::{kmeans, KmeansResult};

use std::fmt;
use std::str::FromStr;

use crate::admm::{admm_solve, AdmmConfig, AdmmReport};
use crate::closed_form::{
    build_delta, glrr_f_solve, kglrr_solve, ClosedFormReport, LowRankCoefficients,
};
use crate::error::{Error, Result};
use crate::grassmann::GrassmannPoint;
use crate::kernels::KernelSpec;
use crate::linalg::{sym_eig, Matrix};

/// Symmetric nonnegative affinity `W = (|Z| + |Z^T|)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affinity {
    pub w: Matrix,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabels {
    labels: Vec<usize>,
    k: usize,
}

impl ClusterLabels {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::InvalidInput(format!("label {bad} outside [0, {k})")));
        }
        if labels.len() < k {
            return Err(Error::InvalidInput(format!(
                "{} labels cannot cover {k} clusters",
                labels.len()
            )));
        }
        Ok(ClusterLabels { labels, k })
    }

    /// Infers `C` as one past the largest label.
    pub fn from_labels(labels: Vec<usize>) -> Result<Self> {
        let k = labels.iter().max().map_or(0, |m| m + 1);
        Self::new(labels, k)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn cluster_count(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NcutConfig {
    pub clusters: usize,
    pub kmeans_restarts: usize,
    pub kmeans_max_iters: usize,
    pub seed: u64,
}

impl NcutConfig {
    pub fn new(clusters: usize, seed: u64) -> Self {
        NcutConfig {
            clusters,
            kmeans_restarts: 20,
            kmeans_max_iters: 300,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.clusters < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 clusters, got {}",
                self.clusters
            )));
        }
        if self.kmeans_restarts == 0 {
            return Err(Error::InvalidConfig("k-means restarts must be >= 1".into()));
        }
        Ok(())
    }
}

/// Built from the upper triangle and mirrored, so exactly symmetric.
pub fn affinity_from_z(z: &LowRankCoefficients) -> Result<Affinity> {
    let z = &z.z;
    let n = z.nrows();
    if z.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "coefficient matrix must be square, got {}x{}",
            n,
            z.ncols()
        )));
    }
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = 0.5 * (z[(i, j)].abs() + z[(j, i)].abs());
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    Ok(Affinity { w })
}

/// Row-normalized eigenvectors of the `C` smallest eigenvalues of
/// `L = I − D^{-1/2} W D^{-1/2}`. Zero-degree vertices get `D^{-1/2} = 0`.
pub fn spectral_embedding(w: &Affinity, clusters: usize) -> Result<Matrix> {
    let w = &w.w;
    let n = w.nrows();
    if w.ncols() != n {
        return Err(Error::InvalidInput("affinity must be square".into()));
    }
    if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidInput(
            "affinity must be finite and nonnegative".into(),
        ));
    }
    if clusters > n {
        return Err(Error::InvalidConfig(format!(
            "cannot form {clusters} clusters from {n} points"
        )));
    }
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let deg: f64 = w.row(i).sum();
            if deg > 0.0 {
                1.0 / deg.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let lap = Matrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - inv_sqrt[i] * w[(i, j)] * inv_sqrt[j]
    });
    let eig = sym_eig(&lap)?;
    // Eigenvalues come sorted descending; the smallest C sit at the end.
    let mut emb = Matrix::from_fn(n, clusters, |i, c| eig.eigenvectors[(i, n - 1 - c)]);
    for mut row in emb.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    Ok(emb)
}

pub fn ncut(w: &Affinity, cfg: &NcutConfig) -> Result<ClusterLabels> {
    cfg.validate()?;
    let emb = spectral_embedding(w, cfg.clusters)?;
    let res = kmeans(
        &emb,
        cfg.clusters,
        cfg.kmeans_restarts,
        cfg.kmeans_max_iters,
        cfg.seed,
    )?;
    ClusterLabels::new(res.labels, cfg.clusters)
}

/// Share of total affinity that falls inside the given clusters; 1 for a
/// perfectly block-diagonal `W`, 0 when `W = 0`.
pub fn block_structure_score(w: &Affinity, labels: &ClusterLabels) -> f64 {
    let l = labels.labels();
    let mut within = 0.0;
    let mut total = 0.0;
    for i in 0..w.w.nrows() {
        for j in 0..w.w.ncols() {
            total += w.w[(i, j)];
            if l[i] == l[j] {
                within += w.w[(i, j)];
            }
        }
    }
    if total > 0.0 {
        within / total
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    GlrrF,
    Glrr21,
    Kglrr(KernelSpec),
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::GlrrF => "glrr-f",
            Method::Glrr21 => "glrr-21",
            Method::Kglrr(_) => "kglrr",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Kglrr(k) => write!(f, "kglrr-{k}"),
            m => f.write_str(m.name()),
        }
    }
}

/// Parses `glrr-f`, `glrr-21` or `kglrr` (projection kernel); use
/// [`Method::Kglrr`] directly for other kernels.
impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "glrr-f" => Ok(Method::GlrrF),
            "glrr-21" => Ok(Method::Glrr21),
            "kglrr" => Ok(Method::Kglrr(KernelSpec::Projection)),
            other => Err(Error::InvalidConfig(format!(
                "unknown method '{other}' (expected glrr-f, glrr-21 or kglrr)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub enum SolverReport {
    ClosedForm(ClosedFormReport),
    Admm(AdmmReport),
}

#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub solver: SolverReport,
    pub block_score: f64,
}

impl Diagnostics {
    /// ADMM iteration count, 0 for closed-form methods.
    pub fn iterations(&self) -> usize {
        match &self.solver {
            SolverReport::Admm(r) => r.iterations,
            SolverReport::ClosedForm(_) => 0,
        }
    }

    /// Closed-form methods always count as converged.
    pub fn converged(&self) -> bool {
        match &self.solver {
            SolverReport::Admm(r) => r.converged,
            SolverReport::ClosedForm(_) => true,
        }
    }

    pub fn clamp_magnitude(&self) -> f64 {
        match &self.solver {
            SolverReport::ClosedForm(r) => r.clamp_magnitude,
            SolverReport::Admm(_) => 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub labels: ClusterLabels,
    pub z: LowRankCoefficients,
    pub diagnostics: Diagnostics,
}

/// Solver → affinity → ncut. `admm.lambda` is the λ for every method.
pub fn cluster_pipeline(
    points: &[GrassmannPoint],
    method: Method,
    admm: &AdmmConfig,
    ncut_cfg: &NcutConfig,
) -> Result<PipelineOutput> {
    ncut_cfg.validate()?;
    let lambda = admm.lambda;
    let (z, solver) = match method {
        Method::GlrrF => {
            let delta = build_delta(points)?;
            let (z, r) = glrr_f_solve(delta.values(), lambda)?;
            (z, SolverReport::ClosedForm(r))
        }
        Method::Kglrr(spec) => {
            let (z, r) = kglrr_solve(points, spec, lambda)?;
            (z, SolverReport::ClosedForm(r))
        }
        Method::Glrr21 => {
            let delta = build_delta(points)?;
            let sol = admm_solve(&delta, admm)?;
            (sol.z, SolverReport::Admm(sol.report))
        }
    };
    let w = affinity_from_z(&z)?;
    let labels = ncut(&w, ncut_cfg)?;
    let block_score = block_structure_score(&w, &labels);
    Ok(PipelineOutput {
        labels,
        z,
        diagnostics: Diagnostics {
            solver,
            block_score,
        },
    })
}
