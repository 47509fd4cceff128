//! Time-parameterized matrix flows `A(t)` with analytic derivatives.

mod gallery;

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::random::{real_gaussian, rng};
use crate::linalg::DenseMatrix;
use crate::C64;

pub use gallery::{derog_ut, describe as describe_gallery, frank, gallery, kahan, random_unitary_similarity, two_by_two, GalleryKind, DEROG_UT_NORM, DEROG_UT_SEED, KAHAN_THETA};

/// A matrix flow `A(t)` with derivative `Ȧ(t)`.
pub trait MatrixFlow {
    fn dim(&self) -> usize;
    fn value(&self, t: f64) -> Result<DenseMatrix>;
    fn derivative(&self, t: f64) -> Result<DenseMatrix>;
    /// Human-readable construction record for run summaries.
    fn descriptor(&self) -> String;
}

/// `A(t) ≡ A`.
#[derive(Clone, Debug)]
pub struct ConstantFlow {
    a: DenseMatrix,
}

impl ConstantFlow {
    pub fn new(a: DenseMatrix) -> Self {
        Self { a }
    }
}

impl MatrixFlow for ConstantFlow {
    fn dim(&self) -> usize {
        self.a.rows()
    }

    fn value(&self, _t: f64) -> Result<DenseMatrix> {
        Ok(self.a.clone())
    }

    fn derivative(&self, _t: f64) -> Result<DenseMatrix> {
        Ok(DenseMatrix::zeros(self.a.rows(), self.a.cols()))
    }

    fn descriptor(&self) -> String {
        alloc::format!("constant {}x{}", self.a.rows(), self.a.cols())
    }
}

/// `A(t) = W(t)·W(t)` with `W(t) = C₀ + C₁·sin(ωt) + C₂·cos(ω′t) + γ·t·I`.
#[derive(Clone, Debug)]
pub struct SquaredTrialFlow {
    c0: DenseMatrix,
    c1: DenseMatrix,
    c2: DenseMatrix,
    omega: f64,
    omega2: f64,
    gamma: f64,
    seed: u64,
}

impl SquaredTrialFlow {
    pub const OMEGA: f64 = 1.0;
    pub const OMEGA2: f64 = 0.7;
    pub const GAMMA: f64 = 0.3;

    /// The known square root `W(t)`.
    pub fn root(&self, t: f64) -> DenseMatrix {
        let n = self.c0.rows();
        let mut w = self.c0.clone();
        w.axpy(C64::new(libm::sin(self.omega * t), 0.0), &self.c1);
        w.axpy(C64::new(libm::cos(self.omega2 * t), 0.0), &self.c2);
        w.axpy(C64::new(self.gamma * t, 0.0), &DenseMatrix::identity(n));
        w
    }

    fn root_derivative(&self, t: f64) -> DenseMatrix {
        let n = self.c0.rows();
        let mut w = self.c1.scale_real(self.omega * libm::cos(self.omega * t));
        w.axpy(C64::new(-self.omega2 * libm::sin(self.omega2 * t), 0.0), &self.c2);
        w.axpy(C64::new(self.gamma, 0.0), &DenseMatrix::identity(n));
        w
    }
}

/// Seeded square-root trial flow of size `n ≥ 2`.
pub fn trial_flow_squared(n: usize, seed: u64) -> Result<SquaredTrialFlow> {
    trial_flow_squared_with(n, seed, SquaredTrialFlow::GAMMA)
}

pub fn trial_flow_squared_with(n: usize, seed: u64, gamma: f64) -> Result<SquaredTrialFlow> {
    if n < 2 {
        return Err(Error::InvalidArgument(alloc::format!("trial flow needs n >= 2, got {n}")));
    }
    let mut r = rng(seed);
    let c0 = &real_gaussian(n, n, &mut r) + &DenseMatrix::identity(n).scale_real(2.0);
    let c1 = real_gaussian(n, n, &mut r);
    let c2 = real_gaussian(n, n, &mut r);
    Ok(SquaredTrialFlow {
        c0,
        c1,
        c2,
        omega: SquaredTrialFlow::OMEGA,
        omega2: SquaredTrialFlow::OMEGA2,
        gamma,
        seed,
    })
}

impl MatrixFlow for SquaredTrialFlow {
    fn dim(&self) -> usize {
        self.c0.rows()
    }

    fn value(&self, t: f64) -> Result<DenseMatrix> {
        let w = self.root(t);
        Ok(&w * &w)
    }

    fn derivative(&self, t: f64) -> Result<DenseMatrix> {
        let w = self.root(t);
        let wd = self.root_derivative(t);
        Ok(&(&wd * &w) + &(&w * &wd))
    }

    fn descriptor(&self) -> String {
        alloc::format!(
            "squared trial flow n={} seed={} W(t)=C0+C1*sin({}t)+C2*cos({}t)+{}*t*I",
            self.c0.rows(),
            self.seed,
            self.omega,
            self.omega2,
            self.gamma
        )
    }
}

/// `A(t) = B₀ + B₁·sin(ωt) + B₂·cos(ω′t)`, optionally with complex entries.
#[derive(Clone, Debug)]
pub struct TrigTrialFlow {
    b: [DenseMatrix; 3],
    omega: f64,
    omega2: f64,
    seed: u64,
    complex: bool,
}

impl TrigTrialFlow {
    pub const OMEGA: f64 = 0.31;
    pub const OMEGA2: f64 = 0.17;
}

pub fn trial_flow_general(n: usize, seed: u64, complex: bool) -> Result<TrigTrialFlow> {
    if n < 1 {
        return Err(Error::EmptyDimension);
    }
    let mut r = rng(seed);
    let mut b: [DenseMatrix; 3] = core::array::from_fn(|_| real_gaussian(n, n, &mut r));
    if complex {
        for m in &mut b {
            let im = real_gaussian(n, n, &mut r);
            m.axpy(C64::new(0.0, 1.0), &im);
        }
    }
    Ok(TrigTrialFlow { b, omega: TrigTrialFlow::OMEGA, omega2: TrigTrialFlow::OMEGA2, seed, complex })
}

impl MatrixFlow for TrigTrialFlow {
    fn dim(&self) -> usize {
        self.b[0].rows()
    }

    fn value(&self, t: f64) -> Result<DenseMatrix> {
        let mut a = self.b[0].clone();
        a.axpy(C64::new(libm::sin(self.omega * t), 0.0), &self.b[1]);
        a.axpy(C64::new(libm::cos(self.omega2 * t), 0.0), &self.b[2]);
        Ok(a)
    }

    fn derivative(&self, t: f64) -> Result<DenseMatrix> {
        let mut a = self.b[1].scale_real(self.omega * libm::cos(self.omega * t));
        a.axpy(C64::new(-self.omega2 * libm::sin(self.omega2 * t), 0.0), &self.b[2]);
        Ok(a)
    }

    fn descriptor(&self) -> String {
        alloc::format!(
            "trig trial flow n={} seed={} {} A(t)=B0+B1*sin({}t)+B2*cos({}t)",
            self.b[0].rows(),
            self.seed,
            if self.complex { "complex" } else { "real" },
            self.omega,
            self.omega2
        )
    }
}

/// Parameters of the homotopy `A(t) = t·A + (1 − t)^a·BB` on a grid that
/// ends exactly at `t = 1`.
#[derive(Clone, Debug)]
pub struct HomotopyParams {
    pub target: DenseMatrix,
    pub perturbation: DenseMatrix,
    pub approach_exponent: f64,
    pub t0: f64,
    pub tau: f64,
    steps: usize,
    bb_norm: f64,
}

impl HomotopyParams {
    pub fn new(target: DenseMatrix, perturbation: DenseMatrix, approach_exponent: f64, t0: f64, tau: f64) -> Result<Self> {
        if !target.is_square() || target.rows() != perturbation.rows() || target.cols() != perturbation.cols() {
            return Err(Error::DimensionMismatch {
                op: "homotopy",
                detail: alloc::format!(
                    "target {}x{}, perturbation {}x{}",
                    target.rows(),
                    target.cols(),
                    perturbation.rows(),
                    perturbation.cols()
                ),
            });
        }
        if !(approach_exponent > 0.0) {
            return Err(Error::InvalidArgument("approach exponent must be positive".into()));
        }
        if !(t0 < 1.0) || !(tau > 0.0) {
            return Err(Error::InvalidArgument(alloc::format!("need t0 < 1 and tau > 0, got t0={t0}, tau={tau}")));
        }
        let steps = grid_steps(t0, tau)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("(1 - t0)/tau is not an integer for t0={t0}, tau={tau}")))?;
        let bb_norm = perturbation.frobenius_norm();
        if bb_norm == 0.0 {
            return Err(Error::ZeroMatrix { op: "homotopy perturbation" });
        }
        Ok(Self { target, perturbation, approach_exponent, t0, tau, steps, bb_norm })
    }

    /// Number of grid steps `K = (1 − t0)/τ`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn bb_norm(&self) -> f64 {
        self.bb_norm
    }

    /// Grid point `t_k = 1 − (K − k)·τ`; `t_K = 1` exactly.
    pub fn time(&self, k: usize) -> f64 {
        1.0 - (self.steps - k.min(self.steps)) as f64 * self.tau
    }
}

/// `K` with `(1 − t0) = K·τ` up to decimal rounding.
pub(crate) fn grid_steps(t0: f64, tau: f64) -> Option<usize> {
    let ratio = (1.0 - t0) / tau;
    let k = libm::round(ratio);
    if k >= 1.0 && (ratio - k).abs() <= 1e-9 * k.max(1.0) {
        Some(k as usize)
    } else {
        None
    }
}

/// The static-matrix homotopy flow.
#[derive(Clone, Debug)]
pub struct HomotopyFlow {
    p: HomotopyParams,
}

pub fn homotopy_flow(p: HomotopyParams) -> HomotopyFlow {
    HomotopyFlow { p }
}

impl HomotopyFlow {
    pub fn params(&self) -> &HomotopyParams {
        &self.p
    }
}

impl MatrixFlow for HomotopyFlow {
    fn dim(&self) -> usize {
        self.p.target.rows()
    }

    fn value(&self, t: f64) -> Result<DenseMatrix> {
        if t > 1.0 {
            return Err(Error::TimeOutOfRange { t });
        }
        let mut a = self.p.target.scale_real(t);
        let w = libm::pow(1.0 - t, self.p.approach_exponent);
        if w != 0.0 {
            a.axpy(C64::new(w, 0.0), &self.p.perturbation);
        }
        Ok(a)
    }

    fn derivative(&self, t: f64) -> Result<DenseMatrix> {
        if t > 1.0 {
            return Err(Error::TimeOutOfRange { t });
        }
        let a = self.p.approach_exponent;
        let w = a * libm::pow(1.0 - t, a - 1.0);
        if !w.is_finite() {
            return Err(Error::NonFinite { op: "homotopy derivative" });
        }
        let mut d = self.p.target.clone();
        if w != 0.0 {
            d.axpy(C64::new(-w, 0.0), &self.p.perturbation);
        }
        Ok(d)
    }

    fn descriptor(&self) -> String {
        alloc::format!(
            "homotopy n={} a={} t0={} tau={} K={} |BB|_F={:e}",
            self.p.target.rows(),
            self.p.approach_exponent,
            self.p.t0,
            self.p.tau,
            self.p.steps,
            self.p.bb_norm
        )
    }
}

/// Largest relative mismatch `‖Ȧ(t) − (A(t+δ) − A(t−δ))/2δ‖_F / max(1, ‖Ȧ(t)‖_F)`
/// over the sample times.
pub fn derivative_mismatch(flow: &dyn MatrixFlow, times: &[f64], delta: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &t in times {
        let d = flow.derivative(t)?;
        let fd = (&flow.value(t + delta)? - &flow.value(t - delta)?).scale_real(0.5 / delta);
        worst = worst.max((&d - &fd).frobenius_norm() / d.frobenius_norm().max(1.0));
    }
    Ok(worst)
}

/// Seeded sample times in `[lo, hi]`.
pub fn sample_times(lo: f64, hi: f64, count: usize, seed: u64) -> Vec<f64> {
    use rand::Rng;
    let mut r = rng(seed);
    (0..count).map(|_| r.random_range(lo..=hi)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sqrt_residual;
    use crate::testutil::random_matrix;

    #[test]
    fn squared_flow_has_its_root() {
        let f = trial_flow_squared(3, 7).unwrap();
        for t in [10.0, 55.5, 3600.0] {
            let a = f.value(t).unwrap();
            let res = sqrt_residual(&a, &f.root(t));
            assert!(res < 1e-13, "{res}");
        }
        assert!(f.value(3600.0).unwrap().frobenius_norm() >= 1e5);
    }

    #[test]
    fn trial_flows_pass_derivative_validator() {
        let times = sample_times(10.0, 3610.0, 20, 1);
        let sq = trial_flow_squared(3, 7).unwrap();
        // Scale-aware step: A grows like t², so use a relative δ.
        assert!(derivative_mismatch(&sq, &times, 1e-6).unwrap() < 1e-6 * 3610.0);
        for complex in [false, true] {
            let g = trial_flow_general(5, 11, complex).unwrap();
            assert!(derivative_mismatch(&g, &times, 1e-5).unwrap() < 1e-6);
        }
    }

    #[test]
    fn real_flow_stays_real() {
        let g = trial_flow_general(5, 11, false).unwrap();
        assert!(g.value(123.4).unwrap().is_real());
        assert!(!trial_flow_general(5, 11, true).unwrap().value(1.0).unwrap().is_real());
    }

    #[test]
    fn homotopy_endpoints() {
        let a = random_matrix(4, 4, 1);
        let bb = random_matrix(4, 4, 2).scale_real(1e-2);
        let p = HomotopyParams::new(a.clone(), bb.clone(), 1.1, 0.985, 0.001).unwrap();
        assert_eq!(p.steps(), 15);
        assert_eq!(p.time(15), 1.0);
        let f = homotopy_flow(p);
        assert_eq!(f.value(1.0).unwrap(), a);
        assert_eq!(f.derivative(1.0).unwrap(), a);
        let t0 = 0.985;
        let mut expected = a.scale_real(t0);
        expected.axpy(C64::new(libm::pow(0.015, 1.1), 0.0), &bb);
        assert!((&f.value(t0).unwrap() - &expected).frobenius_norm() < 1e-15);
        assert!(matches!(f.value(1.0 + 1e-12), Err(Error::TimeOutOfRange { .. })));
    }

    #[test]
    fn homotopy_derivative_closed_form() {
        let a = random_matrix(3, 3, 3);
        let bb = random_matrix(3, 3, 4);
        let f = homotopy_flow(HomotopyParams::new(a.clone(), bb.clone(), 1.1, 0.985, 0.001).unwrap());
        let mut expected = a.clone();
        expected.axpy(C64::new(-1.1 * libm::pow(0.015, 0.1), 0.0), &bb);
        let d = f.derivative(0.985).unwrap();
        assert!((&d - &expected).frobenius_norm() < 1e-14);
        let fd = derivative_mismatch(&f, &[0.985, 0.99, 0.995], 1e-7).unwrap();
        assert!(fd < 1e-6, "{fd}");
    }

    #[test]
    fn homotopy_rejects_unsynchronized_grid() {
        let a = random_matrix(2, 2, 1);
        assert!(HomotopyParams::new(a.clone(), a.clone(), 1.1, 0.985, 0.0007).is_err());
        assert!(HomotopyParams::new(a.clone(), DenseMatrix::zeros(2, 2), 1.1, 0.985, 0.001).is_err());
    }

    #[test]
    fn grid_lands_on_one() {
        for (t0, tau) in [(0.985, 0.001), (0.9985, 0.0001), (0.985, 0.0006), (0.5, 0.1)] {
            let a = random_matrix(2, 2, 1);
            let p = HomotopyParams::new(a.clone(), a, 2.0, t0, tau).unwrap();
            assert_eq!(p.time(p.steps()), 1.0);
            assert!((p.time(0) - t0).abs() < 1e-14);
        }
    }
}
