use crate::linalg::random::{complex_gaussian, rng};
use crate::linalg::DenseMatrix;

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    complex_gaussian(rows, cols, &mut rng(seed))
}
