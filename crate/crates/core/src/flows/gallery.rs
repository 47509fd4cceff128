//! Hard static test matrices.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::random::{complex_gaussian, rng};
use crate::linalg::{spectral_norm, DenseMatrix, PivotedQr};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GalleryKind {
    Kahan,
    Frank,
    DerogUt,
    TwoByTwo,
}

impl GalleryKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kahan" => Some(Self::Kahan),
            "frank" => Some(Self::Frank),
            "derog_ut" | "cut" | "c_ut" => Some(Self::DerogUt),
            "two_by_two" | "2x2" => Some(Self::TwoByTwo),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Kahan => "kahan",
            Self::Frank => "frank",
            Self::DerogUt => "derog_ut",
            Self::TwoByTwo => "two_by_two",
        }
    }
}

pub const KAHAN_THETA: f64 = 1.2;
pub const DEROG_UT_NORM: f64 = 281.0;
pub const DEROG_UT_SEED: u64 = 23;

/// `gallery(kind, n, alpha)`; `alpha` is only read by `TwoByTwo`, which
/// ignores `n`.
pub fn gallery(kind: GalleryKind, n: usize, alpha: f64) -> Result<DenseMatrix> {
    match kind {
        GalleryKind::TwoByTwo => Ok(two_by_two(alpha)),
        _ if n == 0 => Err(Error::EmptyDimension),
        GalleryKind::Kahan => Ok(kahan(n)),
        GalleryKind::Frank => Ok(frank(n)),
        GalleryKind::DerogUt => derog_ut(n, DEROG_UT_SEED),
    }
}

/// Upper-triangular Kahan matrix `diag(sⁱ)·(I − c·triu(1, 1))` with
/// `s = sin θ`, `c = cos θ`, plus the customary `25·eps·diag(n, …, 1)`.
pub fn kahan(n: usize) -> DenseMatrix {
    let (s, c) = (libm::sin(KAHAN_THETA), libm::cos(KAHAN_THETA));
    let pert = 25.0 * f64::EPSILON;
    DenseMatrix::from_fn(n, n, |i, j| {
        let scale = libm::pow(s, i as f64);
        let v = if i == j {
            scale + pert * (n - i) as f64
        } else if j > i {
            -c * scale
        } else {
            0.0
        };
        C64::new(v, 0.0)
    })
}

/// Frank matrix: `F(i, j) = n − max(i, j)` (0-based) for `j ≥ i − 1`.
pub fn frank(n: usize) -> DenseMatrix {
    DenseMatrix::from_fn(n, n, |i, j| {
        if j + 1 >= i {
            C64::new((n - i.max(j)) as f64, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `[[0, 1], [0, α]]`.
pub fn two_by_two(alpha: f64) -> DenseMatrix {
    DenseMatrix::from_real_rows(&[[0.0, 1.0], [0.0, alpha]]).expect("2x2 literal")
}

/// Derogatory upper-triangular matrix `U·J·U⁻¹` scaled to 2-norm 281.
///
/// `J` is block diagonal with Jordan blocks of sizes 3, 2, 3, 2, … whose
/// eigenvalues cycle through 1, −2, 3, so every eigenvalue owns several blocks.
/// `U` is seeded unit upper triangular.
pub fn derog_ut(n: usize, seed: u64) -> Result<DenseMatrix> {
    if n == 0 {
        return Err(Error::EmptyDimension);
    }
    const EIGS: [f64; 3] = [1.0, -2.0, 3.0];
    let mut j = DenseMatrix::zeros(n, n);
    let (mut start, mut block) = (0usize, 0usize);
    while start < n {
        let size = if block % 2 == 0 { 3 } else { 2 };
        let end = (start + size).min(n);
        let lambda = EIGS[block % EIGS.len()];
        for k in start..end {
            j[(k, k)] = C64::new(lambda, 0.0);
            if k + 1 < end {
                j[(k, k + 1)] = C64::new(1.0, 0.0);
            }
        }
        start = end;
        block += 1;
    }

    let mut r = rng(seed);
    let g = crate::linalg::random::real_gaussian(n, n, &mut r);
    let spread = 0.3 / libm::sqrt(n as f64);
    let u = DenseMatrix::from_fn(n, n, |i, k| match i.cmp(&k) {
        core::cmp::Ordering::Equal => C64::new(1.0, 0.0),
        core::cmp::Ordering::Less => g[(i, k)].scale(spread),
        core::cmp::Ordering::Greater => C64::new(0.0, 0.0),
    });
    let u_inv = unit_upper_inverse(&u);
    let m = &(&u * &j) * &u_inv;
    let m = DenseMatrix::from_fn(n, n, |i, k| if i > k { C64::new(0.0, 0.0) } else { m[(i, k)] });
    Ok(m.scale_real(DEROG_UT_NORM / spectral_norm(&m)))
}

fn unit_upper_inverse(u: &DenseMatrix) -> DenseMatrix {
    let n = u.rows();
    let mut inv = DenseMatrix::identity(n);
    for col in 0..n {
        for i in (0..col).rev() {
            let mut acc = C64::new(0.0, 0.0);
            for k in i + 1..=col {
                acc += u[(i, k)] * inv[(k, col)];
            }
            inv[(i, col)] = -acc;
        }
    }
    inv
}

/// `Qᴴ·A·Q` for a seeded Haar-distributed unitary `Q`.
pub fn random_unitary_similarity(a: &DenseMatrix, seed: u64) -> Result<DenseMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            op: "random_unitary_similarity",
            detail: alloc::format!("{}x{} is not square", a.rows(), a.cols()),
        });
    }
    let q = haar_unitary(a.rows(), seed);
    Ok(&(&q.adjoint() * a) * &q)
}

pub(crate) fn haar_unitary(n: usize, seed: u64) -> DenseMatrix {
    let mut r = rng(seed);
    let z = complex_gaussian(n, n, &mut r);
    let qr = PivotedQr::new(&z, false);
    let phases: Vec<C64> = (0..n)
        .map(|i| {
            let d = qr.r()[(i, i)];
            if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) }
        })
        .collect();
    let mut q = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let col = q.col_mut(j);
        col[j] = phases[j];
        qr.apply_q(col);
    }
    q
}

pub fn describe(kind: GalleryKind, n: usize, alpha: f64) -> String {
    match kind {
        GalleryKind::TwoByTwo => alloc::format!("two_by_two alpha={alpha:e}"),
        GalleryKind::DerogUt => alloc::format!("derog_ut stand-in n={n} seed={DEROG_UT_SEED}"),
        _ => alloc::format!("{} n={n}", kind.label()),
    }
}
