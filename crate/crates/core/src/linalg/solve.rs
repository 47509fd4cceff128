use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{frobenius, DenseMatrix, Lu, Svd};
use crate::C64;

/// Relative singular value cut-off used when a caller has no preference.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    Direct,
    LeastSquaresPseudoinverse,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub solution: Vec<C64>,
    pub method: SolveMethod,
    pub rank_estimate: usize,
    /// `‖P·solution − q‖₂` as computed.
    pub residual_norm: f64,
}

/// Solves `P·x = q`, falling back to the minimum-norm least-squares solution
/// when `P` has singular values at or below `rank_tol·σ_max`.
pub fn solve(p: &DenseMatrix, q: &[C64], rank_tol: f64) -> Result<SolveReport> {
    if !p.is_square() {
        return Err(Error::DimensionMismatch {
            op: "solve",
            detail: alloc::format!("P is {}x{}, expected square", p.rows(), p.cols()),
        });
    }
    if p.rows() != q.len() {
        return Err(Error::DimensionMismatch {
            op: "solve",
            detail: alloc::format!("P has {} rows, q has length {}", p.rows(), q.len()),
        });
    }
    if !p.is_finite() || !q.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite { op: "solve" });
    }
    let n = p.rows();
    let svd = Svd::new(p);
    let rank = svd.rank(rank_tol);
    let (solution, method) = if rank == n {
        match Lu::new(p).solve(q) {
            Some(x) => (x, SolveMethod::Direct),
            None => (svd.pinv_apply(q, rank), SolveMethod::LeastSquaresPseudoinverse),
        }
    } else {
        (svd.pinv_apply(q, rank), SolveMethod::LeastSquaresPseudoinverse)
    };
    if !solution.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite { op: "solve" });
    }
    let residual_norm = residual(p, &solution, q);
    Ok(SolveReport { solution, method, rank_estimate: rank, residual_norm })
}

pub(crate) fn residual(p: &DenseMatrix, x: &[C64], q: &[C64]) -> f64 {
    let mut r = p.mul_vec(x);
    for (ri, qi) in r.iter_mut().zip(q) {
        *ri -= qi;
    }
    frobenius(&r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::kron;
    use crate::testutil::random_matrix;
    use proptest::prelude::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn scaled_identity_is_direct() {
        let p = DenseMatrix::identity(4).scale_real(2.0);
        let q = [c(1.0), c(-2.0), C64::new(0.0, 3.0), c(4.0)];
        let rep = solve(&p, &q, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(rep.method, SolveMethod::Direct);
        assert_eq!(rep.rank_estimate, 4);
        for (x, y) in rep.solution.iter().zip(&q) {
            assert_eq!(*x, y / 2.0);
        }
    }

    #[test]
    fn rank_two_diagonal_gives_min_norm() {
        let p = DenseMatrix::from_real_diag(&[1.0, 1.0, 0.0]);
        let rep = solve(&p, &[c(1.0), c(1.0), c(0.0)], DEFAULT_RANK_TOL).unwrap();
        assert_eq!(rep.method, SolveMethod::LeastSquaresPseudoinverse);
        assert_eq!(rep.rank_estimate, 2);
        assert!(frobenius(&[rep.solution[0] - 1.0, rep.solution[1] - 1.0, rep.solution[2]]) < 1e-15);
    }

    #[test]
    fn symmetrizer_operator_of_diag_has_rank_two() {
        let a = DenseMatrix::from_real_diag(&[1.0, 2.0]);
        let i = DenseMatrix::identity(2);
        let p = &kron(&a.transpose(), &i).unwrap() - &kron(&i, &a.transpose()).unwrap();
        // Oracle: the operator is diagonal with entries λ_j − λ_i.
        let lam = [1.0, 2.0];
        let mut nonzero = 0;
        for j in 0..2 {
            for i in 0..2 {
                if lam[j] - lam[i] != 0.0 {
                    nonzero += 1;
                }
            }
        }
        let rep = solve(&p, &[c(0.0); 4], DEFAULT_RANK_TOL).unwrap();
        assert_eq!(rep.rank_estimate, nonzero);
        assert_eq!(rep.rank_estimate, 2);
    }

    #[test]
    fn rejects_non_finite() {
        let mut p = DenseMatrix::identity(2);
        p[(0, 1)] = c(f64::NAN);
        assert_eq!(solve(&p, &[c(1.0), c(1.0)], 1e-12).unwrap_err(), Error::NonFinite { op: "solve" });
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn direct_residual_bound(n in 1usize..8, seed in 0u64..10_000) {
            let p = &random_matrix(n, n, seed) + &DenseMatrix::identity(n).scale_real(3.0);
            let q = random_matrix(n, 1, seed + 1).vec();
            let rep = solve(&p, &q, DEFAULT_RANK_TOL).unwrap();
            let s = crate::linalg::singular_values(&p);
            if rep.method == SolveMethod::Direct && s[0] / s[n - 1] <= 1e6 {
                let bound = 1e-10 * (p.frobenius_norm() * frobenius(&rep.solution) + frobenius(&q));
                prop_assert!(rep.residual_norm <= bound);
            }
            prop_assert_eq!(rep.method == SolveMethod::Direct, rep.rank_estimate == n);
        }
    }
}
