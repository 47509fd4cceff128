use alloc::vec;
use alloc::vec::Vec;

use num_traits::Zero;

use crate::linalg::{axpy, dot_conj, frobenius, DenseMatrix};
use crate::C64;

/// Householder QR, optionally with column pivoting: `A·Π = Q·R`.
#[derive(Clone, Debug)]
pub struct PivotedQr {
    r: DenseMatrix,
    reflectors: Vec<(Vec<C64>, f64)>,
    perm: Vec<usize>,
}

impl PivotedQr {
    pub fn new(a: &DenseMatrix, pivot: bool) -> Self {
        let (m, n) = (a.rows(), a.cols());
        let steps = m.min(n);
        let mut r = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut reflectors = Vec::with_capacity(steps);
        for k in 0..steps {
            if pivot {
                let mut best = k;
                let mut best_norm = -1.0;
                for j in k..n {
                    let nrm = dot_conj(&r.col(j)[k..], &r.col(j)[k..]).re;
                    if nrm > best_norm {
                        best_norm = nrm;
                        best = j;
                    }
                }
                if best != k {
                    perm.swap(best, k);
                    swap_cols(&mut r, best, k);
                }
            }
            let x = &r.col(k)[k..];
            let norm = frobenius(x);
            if norm == 0.0 {
                reflectors.push((vec![C64::zero(); m - k], 0.0));
                continue;
            }
            let x0 = x[0];
            let phase = if x0.is_zero() { C64::new(1.0, 0.0) } else { x0 / x0.norm() };
            let alpha = -phase * norm;
            let mut v = x.to_vec();
            v[0] -= alpha;
            let vv = dot_conj(&v, &v).re;
            let tau = 2.0 / vv;
            {
                let col = r.col_mut(k);
                col[k] = alpha;
                for z in &mut col[(k + 1)..] {
                    *z = C64::zero();
                }
            }
            for j in (k + 1)..n {
                let col = &mut r.col_mut(j)[k..];
                let s = dot_conj(&v, col) * tau;
                axpy(-s, &v, col);
            }
            reflectors.push((v, tau));
        }
        Self { r, reflectors, perm }
    }

    /// Upper-trapezoidal factor.
    pub fn r(&self) -> &DenseMatrix {
        &self.r
    }

    /// Column permutation: column `j` of `A·Π` is column `perm[j]` of `A`.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Count of `|R_ii| > rel_tol·|R_00|`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let steps = self.reflectors.len();
        let r00 = self.r[(0, 0)].norm();
        if r00 == 0.0 {
            return 0;
        }
        (0..steps).take_while(|&i| self.r[(i, i)].norm() > rel_tol * r00).count()
    }

    /// `y ← Q·y` for a vector of length `rows(A)`.
    pub fn apply_q(&self, y: &mut [C64]) {
        for (k, (v, tau)) in self.reflectors.iter().enumerate().rev() {
            reflect(&mut y[k..], v, *tau);
        }
    }

    /// `y ← Qᴴ·y`.
    pub fn apply_qh(&self, y: &mut [C64]) {
        for (k, (v, tau)) in self.reflectors.iter().enumerate() {
            reflect(&mut y[k..], v, *tau);
        }
    }
}

fn reflect(y: &mut [C64], v: &[C64], tau: f64) {
    if tau == 0.0 {
        return;
    }
    let s = dot_conj(v, y) * tau;
    axpy(-s, v, y);
}

fn swap_cols(m: &mut DenseMatrix, a: usize, b: usize) {
    let rows = m.rows();
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let data = m.as_mut_slice();
    let (left, right) = data.split_at_mut(hi * rows);
    left[lo * rows..(lo + 1) * rows].swap_with_slice(&mut right[..rows]);
}

/// Minimum-norm least-squares solution of `M·x ≈ b` with rank decided by
/// pivoted QR of `Mᴴ`. Returns the solution and the rank estimate.
pub fn min_norm_lstsq(m: &DenseMatrix, b: &[C64], rel_tol: f64) -> (Vec<C64>, usize) {
    assert_eq!(m.rows(), b.len(), "least-squares dimension mismatch");
    let (rows, cols) = (m.rows(), m.cols());
    // Mᴴ·Π = Q·R, so Πᵀ·M = Rᴴ·Qᴴ.
    let qr = PivotedQr::new(&m.adjoint(), true);
    let k = qr.rank(rel_tol);
    let mut x = vec![C64::zero(); cols];
    if k == 0 {
        return (x, 0);
    }
    let pb: Vec<C64> = qr.perm().iter().map(|&p| b[p]).collect();
    let r = qr.r();
    let w = if k == rows {
        // Rᴴ is lower triangular and square.
        let mut w = pb;
        for i in 0..k {
            let mut acc = w[i];
            for j in 0..i {
                acc -= r[(j, i)].conj() * w[j];
            }
            w[i] = acc / r[(i, i)].conj();
        }
        w
    } else {
        // Full-column-rank rows × k problem with matrix (R[0:k, :])ᴴ.
        let rk = DenseMatrix::from_fn(rows, k, |i, j| r[(j, i)].conj());
        let inner = PivotedQr::new(&rk, false);
        let mut y = pb;
        inner.apply_qh(&mut y);
        let r2 = inner.r();
        let mut w = vec![C64::zero(); k];
        for i in (0..k).rev() {
            let mut acc = y[i];
            for j in (i + 1)..k {
                acc -= r2[(i, j)] * w[j];
            }
            w[i] = acc / r2[(i, i)];
        }
        w
    };
    x[..k].copy_from_slice(&w[..k]);
    qr.apply_q(&mut x);
    (x, k)
}
