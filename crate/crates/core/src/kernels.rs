//! Grassmann kernels built from principal angles, Gram assembly and PSD repair.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grassmann::{common_shape, GrassmannPoint};
use crate::linalg::{singular_values, sym_eig, Matrix};

/// Combination weight used by `ccp` when none is given.
pub const DEFAULT_CCP_ALPHA: f64 = 0.5;
/// A Gram matrix counts as PSD when `λ_min >= -PSD_TOL * λ_max`.
pub const PSD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    /// `‖X1^T X2‖_F²`
    Projection,
    /// Largest canonical correlation.
    CcMax,
    /// Sum of canonical correlations.
    CcSum,
    /// `alpha * cc-sum + (1 - alpha) * projection`.
    Ccp { alpha: f64 },
}

impl KernelSpec {
    pub fn ccp(alpha: f64) -> Result<Self> {
        let spec = KernelSpec::Ccp { alpha };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Ccp { alpha } if !(alpha > 0.0 && alpha < 1.0) => Err(
                Error::InvalidConfig(format!("ccp alpha must lie in (0, 1), got {alpha}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x1: &GrassmannPoint, x2: &GrassmannPoint) -> Result<f64> {
        match *self {
            KernelSpec::Projection => k_projection(x1, x2),
            KernelSpec::CcMax => k_cc(x1, x2, CcVariant::Max),
            KernelSpec::CcSum => k_cc(x1, x2, CcVariant::Sum),
            KernelSpec::Ccp { alpha } => k_ccp(x1, x2, alpha),
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Projection => f.write_str("projection"),
            KernelSpec::CcMax => f.write_str("cc-max"),
            KernelSpec::CcSum => f.write_str("cc-sum"),
            KernelSpec::Ccp { alpha } => write!(f, "ccp(alpha={alpha})"),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    /// Accepts `projection`, `cc-max`, `cc-sum` and `ccp`; the latter takes
    /// [`DEFAULT_CCP_ALPHA`].
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "projection" | "p" => Ok(KernelSpec::Projection),
            "cc-max" => Ok(KernelSpec::CcMax),
            "cc-sum" | "cc" => Ok(KernelSpec::CcSum),
            "ccp" => Ok(KernelSpec::Ccp {
                alpha: DEFAULT_CCP_ALPHA,
            }),
            other => Err(Error::InvalidConfig(format!("unknown kernel '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcVariant {
    Max,
    Sum,
}

/// Cosines of the principal angles, descending and clamped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalAngles {
    pub cosines: Vec<f64>,
}

pub fn principal_angle_cosines(
    x1: &GrassmannPoint,
    x2: &GrassmannPoint,
) -> Result<PrincipalAngles> {
    let cross = x1.cross(x2)?;
    // Averaging the spectra of A and A^T makes the result exactly symmetric.
    let forward = singular_values(&cross);
    let backward = singular_values(&cross.transpose());
    let cosines = forward
        .iter()
        .zip(&backward)
        .map(|(a, b)| (0.5 * (a + b)).clamp(0.0, 1.0))
        .collect();
    Ok(PrincipalAngles { cosines })
}

pub fn k_projection(x1: &GrassmannPoint, x2: &GrassmannPoint) -> Result<f64> {
    Ok(x1.cross(x2)?.norm_squared())
}

pub fn k_cc(x1: &GrassmannPoint, x2: &GrassmannPoint, variant: CcVariant) -> Result<f64> {
    let angles = principal_angle_cosines(x1, x2)?;
    Ok(match variant {
        CcVariant::Max => angles.cosines[0],
        CcVariant::Sum => angles.cosines.iter().sum(),
    })
}

pub fn k_ccp(x1: &GrassmannPoint, x2: &GrassmannPoint, alpha: f64) -> Result<f64> {
    KernelSpec::Ccp { alpha }.validate()?;
    let cc = k_cc(x1, x2, CcVariant::Sum)?;
    let proj = k_projection(x1, x2)?;
    Ok(alpha * cc + (1.0 - alpha) * proj)
}

#[derive(Debug, Clone)]
pub struct KernelMatrix {
    pub values: Matrix,
    pub spec: KernelSpec,
    /// Whether negative eigenvalues were truncated.
    pub clamped: bool,
    /// Magnitude of the most negative eigenvalue before repair, 0 if none.
    pub clamp_magnitude: f64,
}

pub fn gram(points: &[GrassmannPoint], spec: KernelSpec) -> Result<KernelMatrix> {
    if points.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "a Gram matrix needs at least 2 points, got {}",
            points.len()
        )));
    }
    spec.validate()?;
    common_shape(points)?;
    let n = points.len();
    let mut values = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let k = spec.eval(&points[i], &points[j])?;
            values[(i, j)] = k;
            values[(j, i)] = k;
        }
    }
    let (values, clamp_magnitude) = psd_clamp(&values)?;
    Ok(KernelMatrix {
        values,
        spec,
        clamped: clamp_magnitude > 0.0,
        clamp_magnitude,
    })
}

/// Projects a symmetric matrix onto the PSD cone by zeroing negative
/// eigenvalues (the Frobenius-nearest PSD matrix). Matrices already PSD to
/// within [`PSD_TOL`] are returned untouched with magnitude 0.
pub fn psd_clamp(k: &Matrix) -> Result<(Matrix, f64)> {
    let eig = sym_eig(k)?;
    let top = eig.max_eigenvalue().max(0.0);
    let bottom = eig.min_eigenvalue();
    if bottom >= -PSD_TOL * top {
        return Ok((k.clone(), 0.0));
    }
    Ok((eig.reconstruct_with(|v| v.max(0.0)), -bottom))
}

/// Symmetric PSD square root `U D^{1/2} U^T`.
pub fn kernel_sqrt(k: &Matrix) -> Result<Matrix> {
    let eig = sym_eig(k)?;
    Ok(eig.reconstruct_with(|v| v.max(0.0).sqrt()))
}
