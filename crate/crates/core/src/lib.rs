//! Phase-adapted zeroing neural network (ZNN) solvers for time-varying
//! matrix equations.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! wall-clock timing live in the companion `aznn` crate.
#![no_std]
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod engine;
pub mod error;
pub mod findiff;
pub mod flows;
pub mod linalg;
pub mod problems;
pub mod static_symm;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;

/// Complex scalar used for every matrix entry.
pub type C64 = num_complex::Complex<f64>;
