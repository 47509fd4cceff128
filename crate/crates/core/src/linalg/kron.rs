use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Kronecker product `A ⊗ B`: block `(i, j)` of the result is `A[i,j]·B`.
pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let rows = a.rows().checked_mul(b.rows()).ok_or(Error::DimensionOverflow { op: "kron" })?;
    let cols = a.cols().checked_mul(b.cols()).ok_or(Error::DimensionOverflow { op: "kron" })?;
    rows.checked_mul(cols).ok_or(Error::DimensionOverflow { op: "kron" })?;
    let mut out = DenseMatrix::zeros(rows, cols);
    for ja in 0..a.cols() {
        for jb in 0..b.cols() {
            let col = out.col_mut(ja * b.cols() + jb);
            for ia in 0..a.rows() {
                let s = a[(ia, ja)];
                let dst = &mut col[ia * b.rows()..(ia + 1) * b.rows()];
                for (d, &bv) in dst.iter_mut().zip(b.col(jb)) {
                    *d = s * bv;
                }
            }
        }
    }
    Ok(out)
}

/// Permutation `p` with `vec(Xᵀ)[k] = vec(X)[p[k]]` for an `rows × cols` matrix X.
pub fn transpose_permutation(rows: usize, cols: usize) -> alloc::vec::Vec<usize> {
    // vec(Xᵀ) walks Xᵀ column by column, i.e. X row by row.
    let mut p = alloc::vec::Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            p.push(i + j * rows);
        }
    }
    p
}
