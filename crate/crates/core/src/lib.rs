//! Subspace clustering by low-rank representation on Grassmann manifolds.
//!
//! Each data object is a linear subspace, stored as an orthonormal basis
//! ([`GrassmannPoint`]). Points are compared through their projection
//! embeddings `X X^T` (or a Grassmann kernel), a low-rank coefficient
//! matrix `Z` is fitted so every point is reconstructed from the others,
//! and `(|Z| + |Z^T|)/2` is fed to normalized-cuts spectral clustering.
//!
//! Solvers:
//! * [`closed_form`]: Frobenius-error model, solved exactly from one
//!   eigendecomposition of the Gram matrix (also the kernelized variant).
//! * [`admm`]: ℓ2/ℓ1 slice-error model, solved by linearized ADMM in an
//!   N x N coefficient space.

pub mod admm;
pub mod closed_form;
pub mod clustering;
pub mod error;
pub mod eval;
pub mod grassmann;
pub mod io;
pub mod kernels;
pub mod linalg;
pub mod rng;
pub mod synth;

pub use closed_form::{build_delta, glrr_f_solve, kglrr_solve, DeltaMatrix, LowRankCoefficients};
pub use error::{Error, Result};
pub use grassmann::{grassmann_distance, orthonormalize, project_embed, GrassmannPoint};
pub use kernels::{gram, KernelMatrix, KernelSpec};
pub use linalg::Matrix;
