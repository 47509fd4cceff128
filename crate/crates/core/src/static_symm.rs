//! Symmetrizers of fixed matrices by Euler AZNN along a homotopy that ends
//! exactly at `t = 1`.

use alloc::string::String;
use alloc::vec::Vec;

use crate::engine::{ProblemAdapter, DIVERGENCE_THRESHOLD};
use crate::error::{Error, Result};
use crate::flows::{homotopy_flow, HomotopyParams, MatrixFlow};
use crate::linalg::random::{complex_gaussian, rng};
use crate::linalg::{condition_and_rank, symm_residual, DenseMatrix, Svd, DEFAULT_RANK_TOL};
use crate::problems::{SymmetrizerAdapter, SymmetrizerStart};
use crate::C64;

#[derive(Clone, Debug, PartialEq)]
pub struct StaticParams {
    pub eta: f64,
    pub approach_exponent: f64,
    pub t0: f64,
    pub tau: f64,
    pub bb_scale: f64,
    pub seed: u64,
    pub preset_name: String,
    pub start: SymmetrizerStart,
    pub start_epsilon: f64,
    /// Relative singular value cut-off of the per-step least-squares solve.
    pub solve_rank_tol: f64,
}

pub const DEFAULT_STATIC_SEED: u64 = 1;

impl StaticParams {
    /// `t0 = 0.985`, `τ = 1e−3`, `h = 0.95`.
    pub fn small() -> Self {
        Self {
            eta: 950.0,
            approach_exponent: 1.1,
            t0: 0.985,
            tau: 1e-3,
            bb_scale: 1e-2,
            seed: DEFAULT_STATIC_SEED,
            preset_name: "small".into(),
            start: SymmetrizerStart::Exchange,
            start_epsilon: SymmetrizerAdapter::DEFAULT_EPSILON,
            solve_rank_tol: DEFAULT_RANK_TOL,
        }
    }

    /// Countervalent scaling of `small`: `η·10`, `a·10`, `bb/100`, `τ/10`.
    pub fn large() -> Self {
        Self {
            eta: 9500.0,
            approach_exponent: 11.0,
            t0: 0.9985,
            tau: 1e-4,
            bb_scale: 1e-4,
            preset_name: "large".into(),
            ..Self::small()
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "small" => Some(Self::small()),
            "large" => Some(Self::large()),
            _ => None,
        }
    }

    pub fn h(&self) -> f64 {
        self.eta * self.tau
    }

    pub fn validate(&self) -> Result<usize> {
        if !(self.eta > 0.0) || !(self.bb_scale > 0.0) || !(self.approach_exponent > 0.0) {
            return Err(Error::InvalidArgument("eta, bb_scale and the approach exponent must be positive".into()));
        }
        if !(self.t0 > 0.0 && self.t0 < 1.0) {
            return Err(Error::InvalidArgument(alloc::format!("t0 must lie in (0, 1), got {}", self.t0)));
        }
        crate::flows::grid_steps(self.t0, self.tau).ok_or_else(|| {
            Error::InvalidArgument(alloc::format!(
                "(1 - t0)/tau is not an integer for t0={}, tau={}; synchronize first",
                self.t0,
                self.tau
            ))
        })
    }
}

/// Largest `τ ≤ tau_hint` on the decimal grid of `t0` and `tau_hint` with
/// `(1 − t0)/τ` an integer.
pub fn synchronize(t0: f64, tau_hint: f64) -> Result<f64> {
    if !(t0 > 0.0 && t0 < 1.0) || !(tau_hint > 0.0) {
        return Err(Error::InvalidArgument(alloc::format!("need 0 < t0 < 1 and tau_hint > 0, got {t0}, {tau_hint}")));
    }
    let d = decimals(t0).max(decimals(tau_hint));
    let unit = libm::pow(10.0, d as f64);
    let span = libm::round((1.0 - t0) * unit) as u64;
    let hint = libm::floor(tau_hint * unit + 1e-6) as u64;
    if span == 0 {
        return Err(Error::InvalidArgument(alloc::format!("t0 = {t0} leaves no room before 1")));
    }
    let div = (1..=hint.min(span)).rev().find(|k| span % k == 0).unwrap_or(1);
    Ok(div as f64 / unit)
}

fn decimals(x: f64) -> u32 {
    (0..=15).find(|&d| {
        let s = x * libm::pow(10.0, d as f64);
        (s - libm::round(s)).abs() <= 1e-9 * s.abs().max(1.0)
    })
    .unwrap_or(15)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymmetrizerCertificate {
    pub s: DenseMatrix,
    pub rel_error: f64,
    pub cond2: f64,
    pub rank: usize,
    pub steps_taken: usize,
    pub h: f64,
    pub preset: String,
    /// `(t_k, ‖S_k·A − Aᵀ·S_k‖_F/‖A‖_F)` for `k = 0..=K`.
    pub trace: Vec<(f64, f64)>,
}

impl SymmetrizerCertificate {
    pub fn full_rank(&self) -> bool {
        self.rank == self.s.rows()
    }
}

/// The seeded perturbation `BB = bb_scale·G` with complex Gaussian `G`.
pub fn perturbation(n: usize, p: &StaticParams) -> DenseMatrix {
    complex_gaussian(n, n, &mut rng(p.seed)).scale_real(p.bb_scale)
}

pub fn solve_static(a: &DenseMatrix, p: &StaticParams) -> Result<SymmetrizerCertificate> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            op: "solve_static",
            detail: alloc::format!("A is {}x{}, expected square", a.rows(), a.cols()),
        });
    }
    if !a.is_finite() {
        return Err(Error::NonFinite { op: "solve_static" });
    }
    p.validate()?;
    let n = a.rows();
    let hp = HomotopyParams::new(a.clone(), perturbation(n, p), p.approach_exponent, p.t0, p.tau)?;
    let k_steps = hp.steps();
    let flow = homotopy_flow(hp);
    let mut adapter = SymmetrizerAdapter::new(n, p.seed.wrapping_add(1)).with_start(p.start);
    adapter.epsilon = p.start_epsilon;
    adapter.rank_tol = p.solve_rank_tol;

    let mut x = adapter.enforce_structure(adapter.initial_guess(a));
    let mut trace = Vec::with_capacity(k_steps + 1);
    let t_start = flow.params().time(0);
    trace.push((t_start, symm_residual(&flow.value(t_start)?, &x)?));
    for k in 0..k_steps {
        let t = flow.params().time(k);
        let rep = adapter.solve_step(&x, t, p.eta, &flow)?;
        let dx = DenseMatrix::unvec(&rep.solution, n, n)?;
        let mut next = x.clone();
        next.axpy(C64::new(p.tau, 0.0), &dx);
        x = adapter.enforce_structure(next);
        let t1 = flow.params().time(k + 1);
        let r = symm_residual(&flow.value(t1)?, &x)?;
        trace.push((t1, r));
        if !r.is_finite() || r > DIVERGENCE_THRESHOLD {
            return Err(Error::Diverged { step: k + 1, t: t1, residual: r });
        }
    }
    let rel_error = symm_residual(a, &x)?;
    let (cond2, rank) = condition_and_rank(&x, DEFAULT_RANK_TOL);
    Ok(SymmetrizerCertificate {
        s: x,
        rel_error,
        cond2,
        rank,
        steps_taken: k_steps,
        h: p.h(),
        preset: p.preset_name.clone(),
        trace,
    })
}

/// Largest `n` the oracle accepts.
pub const ORACLE_MAX_DIM: usize = 8;

/// Frobenius-orthonormal basis of `{S = Sᵀ : S·A = (S·A)ᵀ}` from the SVD of
/// the `n² × n(n+1)/2` system in the entries of `S`.
pub fn nullspace_oracle(a: &DenseMatrix) -> Result<Vec<DenseMatrix>> {
    let n = a.rows();
    if !a.is_square() || n > ORACLE_MAX_DIM {
        return Err(Error::InvalidArgument(alloc::format!(
            "oracle needs a square matrix of size at most {ORACLE_MAX_DIM}, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let unknowns: Vec<(usize, usize)> = (0..n).flat_map(|j| (j..n).map(move |i| (i, j))).collect();
    let basis_elem = |&(i, j): &(usize, usize)| {
        let mut d = DenseMatrix::zeros(n, n);
        if i == j {
            d[(i, i)] = C64::new(1.0, 0.0);
        } else {
            let v = C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
        d
    };
    let elems: Vec<DenseMatrix> = unknowns.iter().map(basis_elem).collect();
    let at = a.transpose();
    let mut m = DenseMatrix::zeros(n * n, unknowns.len());
    for (c, d) in elems.iter().enumerate() {
        let e = &(d * a) - &(&at * d);
        m.col_mut(c).copy_from_slice(e.as_slice());
    }
    let svd = Svd::new(&m);
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let tol = 1e-9 * smax;
    let mut out = Vec::new();
    for (c, &sv) in svd.s.iter().enumerate() {
        if smax == 0.0 || sv <= tol {
            let coords = svd.v.col(c);
            let mut s = DenseMatrix::zeros(n, n);
            for (y, d) in coords.iter().zip(&elems) {
                s.axpy(*y, d);
            }
            out.push(s);
        }
    }
    Ok(out)
}

/// `‖proj(S)‖_F / ‖S‖_F` onto the span of a Frobenius-orthonormal basis.
pub fn projection_retention(basis: &[DenseMatrix], s: &DenseMatrix) -> f64 {
    let ns = s.frobenius_norm();
    if ns == 0.0 {
        return 1.0;
    }
    let sq: f64 = basis
        .iter()
        .map(|b| crate::linalg::dot_conj(b.as_slice(), s.as_slice()).norm_sqr())
        .sum();
    libm::sqrt(sq) / ns
}
