use alloc::vec::Vec;

use num_traits::Zero;

use crate::linalg::{dot_conj, DenseMatrix};
use crate::C64;

const MAX_SWEEPS: usize = 80;

/// Thin singular value decomposition `A = U·diag(s)·Vᴴ` by one-sided
/// (Hestenes) Jacobi rotations.
///
/// `s` is sorted descending. `U` is `rows × cols`; its columns belonging to
/// zero singular values are zero. `V` is a full `cols × cols` unitary.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub v: DenseMatrix,
}

impl Svd {
    pub fn new(a: &DenseMatrix) -> Self {
        let (m, n) = (a.rows(), a.cols());
        let mut g = a.clone();
        let mut v = DenseMatrix::identity(n);
        for _ in 0..MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in (p + 1)..n {
                    let alpha = dot_conj(g.col(p), g.col(p)).re;
                    let beta = dot_conj(g.col(q), g.col(q)).re;
                    let gamma = dot_conj(g.col(p), g.col(q));
                    let mag = gamma.norm();
                    if mag < 1e-290 || mag <= 1e-15 * libm::sqrt(alpha) * libm::sqrt(beta) {
                        continue;
                    }
                    rotated = true;
                    let unit = gamma / mag;
                    let phase = (unit / unit.norm()).conj();
                    let zeta = (beta - alpha) / (2.0 * mag);
                    let t = zeta.signum() / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                    let c = 1.0 / libm::sqrt(1.0 + t * t);
                    let s = c * t;
                    rotate(&mut g, m, p, q, c, s, phase);
                    rotate(&mut v, n, p, q, c, s, phase);
                }
            }
            if !rotated {
                break;
            }
        }
        let norms: Vec<f64> = (0..n).map(|j| libm::sqrt(dot_conj(g.col(j), g.col(j)).re)).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
        let mut u = DenseMatrix::zeros(m, n);
        let mut vs = DenseMatrix::zeros(n, n);
        let mut s = Vec::with_capacity(n);
        for (k, &j) in order.iter().enumerate() {
            let sigma = norms[j];
            s.push(sigma);
            if sigma > 0.0 {
                let inv = 1.0 / sigma;
                for (d, x) in u.col_mut(k).iter_mut().zip(g.col(j)) {
                    *d = x * inv;
                }
            }
            vs.col_mut(k).copy_from_slice(v.col(j));
        }
        Self { u, s, v: vs }
    }

    /// Number of singular values above `rel_tol · σ_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let smax = self.s.first().copied().unwrap_or(0.0);
        self.s.iter().filter(|&&x| x > rel_tol * smax).count()
    }

    /// `Σ_{j<rank} v_j·(u_jᴴ·b)/σ_j`: the truncated pseudoinverse applied to `b`.
    pub fn pinv_apply(&self, b: &[C64], rank: usize) -> Vec<C64> {
        let n = self.v.rows();
        let mut x = alloc::vec![C64::zero(); n];
        for j in 0..rank {
            let coef = dot_conj(self.u.col(j), b) / self.s[j];
            for (xi, vi) in x.iter_mut().zip(self.v.col(j)) {
                *xi += vi * coef;
            }
        }
        x
    }
}

/// Column pair update `[g_p, g_q] ← [c·g_p − s·ē·g_q, s·g_p + c·ē·g_q]`.
fn rotate(m: &mut DenseMatrix, rows: usize, p: usize, q: usize, c: f64, s: f64, phase: C64) {
    let data = m.as_mut_slice();
    for i in 0..rows {
        let xp = data[i + p * rows];
        let xq = data[i + q * rows] * phase;
        data[i + p * rows] = xp * c - xq * s;
        data[i + q * rows] = xp * s + xq * c;
    }
}

/// Singular values in descending order.
pub fn singular_values(a: &DenseMatrix) -> Vec<f64> {
    if a.rows() < a.cols() {
        Svd::new(&a.adjoint()).s
    } else {
        Svd::new(a).s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_matrix;

    fn reconstruct(svd: &Svd) -> DenseMatrix {
        let mut us = svd.u.clone();
        for (j, &s) in svd.s.iter().enumerate() {
            for z in us.col_mut(j) {
                *z *= s;
            }
        }
        &us * &svd.v.adjoint()
    }

    #[test]
    fn reconstructs_tall_and_wide() {
        for (m, n) in [(5, 3), (3, 5), (6, 6)] {
            let a = random_matrix(m, n, (m * 10 + n) as u64);
            let svd = Svd::new(&a);
            let err = (&reconstruct(&svd) - &a).frobenius_norm() / a.frobenius_norm();
            assert!(err < 1e-13, "{m}x{n}: {err}");
            let vtv = &svd.v.adjoint() * &svd.v;
            let orth = (&vtv - &DenseMatrix::identity(n)).frobenius_norm();
            assert!(orth < 1e-13, "{m}x{n}: {orth}");
        }
    }

    #[test]
    fn matches_nalgebra_singular_values() {
        let a = random_matrix(7, 7, 3);
        let na = nalgebra::DMatrix::from_fn(7, 7, |i, j| a[(i, j)]);
        let mut oracle: Vec<f64> = na.singular_values().iter().copied().collect();
        oracle.sort_by(|x, y| y.total_cmp(x));
        for (x, y) in singular_values(&a).iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-12 * oracle[0]);
        }
    }

    #[test]
    fn graded_diagonal_keeps_relative_accuracy() {
        let a = DenseMatrix::from_real_diag(&[1.0, 1e-10, 1e-20]);
        let s = singular_values(&a);
        assert_eq!(s, alloc::vec![1.0, 1e-10, 1e-20]);
    }
}
