//! Seeded random source shared by the synthetic generator and tests.
//!
//! The stream is fully specified so fixtures can be regenerated elsewhere:
//!
//! * generator: xoshiro256++ seeded with `seed_from_u64` (SplitMix64 state
//!   expansion), as implemented by `rand_xoshiro`;
//! * unit double: `(next_u64() >> 11) * 2^-53`, in `[0, 1)`;
//! * normal deviates: Box–Muller on two unit doubles `u1, u2`,
//!   `r = sqrt(-2 ln(1 - u1))`, yielding `r cos(2π u2)` then `r sin(2π u2)`;
//! * matrices are filled in row-major order.

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::linalg::Matrix;

#[derive(Debug, Clone)]
pub struct GaussianRng {
    inner: Xoshiro256PlusPlus,
    spare: Option<f64>,
}

impl GaussianRng {
    pub fn new(seed: u64) -> Self {
        GaussianRng {
            inner: Xoshiro256PlusPlus::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn unit(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: usize) -> usize {
        ((self.unit() * n as f64) as usize).min(n - 1)
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.unit();
        let u2 = self.unit();
        let r = (-2.0 * (1.0 - u1).ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    pub fn matrix(&mut self, rows: usize, cols: usize) -> Matrix {
        let values: Vec<f64> = (0..rows * cols).map(|_| self.normal()).collect();
        Matrix::from_row_slice(rows, cols, &values)
    }
}

/// SplitMix64 finalizer, used as a stateless 64-bit hash.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
