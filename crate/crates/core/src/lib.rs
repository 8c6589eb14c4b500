//! Simultaneous blind demixing and super-resolution of point-source signals.
//!
//! Each of `K` unknown spectrally sparse data matrices `X_k` (size `s x n`) is
//! observed only through the superposition `y = sum_k A_k(X_k)`, where `A_k`
//! pairs column `j` of `X_k` with the `j`-th row of a known subspace matrix
//! `B_k`. Recovery minimises the sum of nuclear norms of the vectorized Hankel
//! lifts `H(X_k)` subject to the measurements. The crate provides:
//!
//! * [`lifting`]: the lift `H`, its adjoint, the weight operator `D` and the
//!   isometry `G = H D^-1`, for one- and two-level (delay-Doppler) geometry;
//! * [`measurement`]: synthetic sources, subspace models, the forward operator
//!   and the additive noise model;
//! * [`solver`]: an ADMM solver for the equality- and ball-constrained
//!   programs;
//! * [`music`]: spatial-smoothing MUSIC in one and two dimensions;
//! * [`certify`]: numerical diagnostics for the dual-certificate conditions.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the double-precision types used by the experiment harness.

pub mod certify;
pub mod error;
pub mod lifting;
pub mod linalg;
pub mod measurement;
pub mod music;
pub mod rng;
pub mod scalar;
pub mod solver;

pub use error::{MvhlError, Result};
pub use lifting::{Lift, LiftShape, LiftShape2D};
pub use measurement::{SourceEnsemble, Subspace, SubspaceModel};
pub use scalar::{CMatrix, CVector, Real};
pub use solver::{SolverConfig, SolverResult};

/// Double-precision complex scalar.
pub type Complex64 = num_complex::Complex<f64>;
/// Double-precision complex matrix (data, lifted and subspace matrices).
pub type Matrix = CMatrix<f64>;
/// Double-precision complex vector (measurements, steering vectors).
pub type Vector = CVector<f64>;
/// Single-precision complex matrix.
pub type Matrix32 = CMatrix<f32>;
/// Single-precision complex vector.
pub type Vector32 = CVector<f32>;
