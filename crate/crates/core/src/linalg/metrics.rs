use crate::error::{Error, Result};
use crate::linalg::{singular_values, DenseMatrix};

/// `‖A − X·X‖_F / max(1, ‖A‖_F)`.
pub fn sqrt_residual(a: &DenseMatrix, x: &DenseMatrix) -> f64 {
    let e = a - &(x * x);
    e.frobenius_norm() / a.frobenius_norm().max(1.0)
}

/// `‖S·A − Aᵀ·S‖_F / ‖A‖_F`.
pub fn symm_residual(a: &DenseMatrix, s: &DenseMatrix) -> Result<f64> {
    let na = a.frobenius_norm();
    if na == 0.0 {
        return Err(Error::ZeroMatrix { op: "symm_residual" });
    }
    let e = &(s * a) - &(&a.transpose() * s);
    Ok(e.frobenius_norm() / na)
}

/// `(σ_max/σ_min, rank)`; the condition number is infinite when the rank
/// falls short of `min(rows, cols)`.
pub fn condition_and_rank(m: &DenseMatrix, rank_tol: f64) -> (f64, usize) {
    let s = singular_values(m);
    let smax = s[0];
    let rank = s.iter().filter(|&&x| x > rank_tol * smax).count();
    let cond = if rank < s.len() || smax == 0.0 { f64::INFINITY } else { smax / s[s.len() - 1] };
    (cond, rank)
}

/// Largest singular value.
pub fn spectral_norm(m: &DenseMatrix) -> f64 {
    singular_values(m)[0]
}
