//! Dense linear algebra: matrices, rank-3 tensors, a Jacobi eigensolver and a
//! seeded random source.

mod eig;
mod matrix;
mod rng;
mod tensor;

pub use eig::{numeric_rank, singular_values, sym_eig, SymmetricSpectrum, DEFAULT_EIG_TOL, MAX_SWEEPS};
pub use matrix::{dot, norm2, Matrix};
pub use rng::{derive_seed, Rng};
pub use tensor::{batched_matvec, Tensor3};
