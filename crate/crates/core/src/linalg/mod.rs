//! Dense complex linear algebra.

mod kron;
mod lu;
mod matrix;
mod metrics;
mod qr;
pub mod random;
mod solve;
mod svd;

pub use kron::{kron, transpose_permutation};
pub use lu::Lu;
pub use matrix::{axpy, dot_conj, frobenius, DenseMatrix};
pub use metrics::{condition_and_rank, spectral_norm, sqrt_residual, symm_residual};
pub use qr::{min_norm_lstsq, PivotedQr};
pub use solve::{solve, SolveMethod, SolveReport, DEFAULT_RANK_TOL};
pub use svd::{singular_values, Svd};
