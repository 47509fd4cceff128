//! Square-root and symmetrizer adapters for the ZNN engine.

use alloc::vec::Vec;

use crate::engine::ProblemAdapter;
use crate::error::{Error, Result};
use crate::flows::MatrixFlow;
use crate::linalg::random::{real_gaussian, rng};
use crate::linalg::{kron, min_norm_lstsq, solve, sqrt_residual, symm_residual, DenseMatrix, SolveMethod, SolveReport, DEFAULT_RANK_TOL};
use crate::C64;

/// `A(t) = X(t)·X(t)`.
#[derive(Clone, Copy, Debug)]
pub struct SquareRootAdapter {
    pub n: usize,
}

impl SquareRootAdapter {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

/// `P = Xᵀ⊗I + I⊗X`, `q = vec(Ȧ) + η·vec(A) − η·(Xᵀ⊗I)·vec(X)`.
pub fn sqrt_build_system(x: &DenseMatrix, t: f64, eta: f64, flow: &dyn MatrixFlow) -> Result<(DenseMatrix, Vec<C64>)> {
    check_square("sqrt_build_system", x, flow.dim())?;
    let i = DenseMatrix::identity(x.rows());
    let xt_i = kron(&x.transpose(), &i)?;
    let p = &xt_i + &kron(&i, x)?;
    let a = flow.value(t)?;
    let ad = flow.derivative(t)?;
    let xx = xt_i.mul_vec(&x.vec());
    let q = ad.as_slice().iter().zip(a.as_slice()).zip(&xx).map(|((d, a), v)| d + (a - v).scale(eta)).collect();
    Ok((p, q))
}

/// Entrywise principal square root.
pub fn sqrt_initial_guess(a0: &DenseMatrix) -> DenseMatrix {
    a0.map(|z| z.sqrt())
}

impl ProblemAdapter for SquareRootAdapter {
    fn dim(&self) -> usize {
        self.n
    }

    fn name(&self) -> &'static str {
        "sqrt"
    }

    fn initial_guess(&self, a0: &DenseMatrix) -> DenseMatrix {
        sqrt_initial_guess(a0)
    }

    fn build_system(&self, x: &DenseMatrix, t: f64, eta: f64, flow: &dyn MatrixFlow) -> Result<(DenseMatrix, Vec<C64>)> {
        sqrt_build_system(x, t, eta, flow)
    }

    fn residual(&self, a: &DenseMatrix, x: &DenseMatrix) -> Result<f64> {
        Ok(sqrt_residual(a, x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymmetrizerStart {
    /// `I + ε·(R + Rᵀ)/2`.
    Identity,
    /// Exchange matrix `J` (ones on the anti-diagonal) plus the same perturbation.
    Exchange,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SymmetrizerSolve {
    /// The full `n² × n²` system through `solve`.
    Full,
    /// Symmetric unknowns and strictly lower equations only.
    Reduced,
}

/// `X·A − Aᵀ·X = 0` with `X` symmetric.
#[derive(Clone, Copy, Debug)]
pub struct SymmetrizerAdapter {
    pub n: usize,
    pub enforce_symmetry: bool,
    pub seed: u64,
    pub epsilon: f64,
    pub start: SymmetrizerStart,
    pub solve: SymmetrizerSolve,
    pub rank_tol: f64,
}

impl SymmetrizerAdapter {
    pub const DEFAULT_EPSILON: f64 = 1e-2;

    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            enforce_symmetry: true,
            seed,
            epsilon: Self::DEFAULT_EPSILON,
            start: SymmetrizerStart::Identity,
            solve: SymmetrizerSolve::Reduced,
            rank_tol: DEFAULT_RANK_TOL,
        }
    }

    pub fn with_start(mut self, start: SymmetrizerStart) -> Self {
        self.start = start;
        self
    }

    pub fn with_solve(mut self, solve: SymmetrizerSolve) -> Self {
        self.solve = solve;
        self
    }
}

/// `P = Aᵀ⊗I − I⊗Aᵀ`, `q = vec(Ȧᵀ·X − X·Ȧ) − η·vec(X·A − Aᵀ·X)`.
pub fn symm_build_system(x: &DenseMatrix, t: f64, eta: f64, flow: &dyn MatrixFlow) -> Result<(DenseMatrix, Vec<C64>)> {
    check_square("symm_build_system", x, flow.dim())?;
    let a = flow.value(t)?;
    let ad = flow.derivative(t)?;
    Ok((symm_operator(&a)?, symm_rhs(x, &a, &ad, eta).into_col_major()))
}

fn symm_operator(a: &DenseMatrix) -> Result<DenseMatrix> {
    let i = DenseMatrix::identity(a.rows());
    let at = a.transpose();
    Ok(&kron(&at, &i)? - &kron(&i, &at)?)
}

fn symm_rhs(x: &DenseMatrix, a: &DenseMatrix, ad: &DenseMatrix, eta: f64) -> DenseMatrix {
    let mut q = &(&ad.transpose() * x) - &(x * ad);
    let e = &(x * a) - &(&a.transpose() * x);
    q.axpy(C64::new(-eta, 0.0), &e);
    q
}

/// `base + ε·(R + Rᵀ)/2` with seeded real Gaussian `R`.
pub fn symm_initial_guess(n: usize, seed: u64, epsilon: f64, start: SymmetrizerStart) -> DenseMatrix {
    let r = real_gaussian(n, n, &mut rng(seed));
    let mut x = match start {
        SymmetrizerStart::Identity => DenseMatrix::identity(n),
        SymmetrizerStart::Exchange => {
            DenseMatrix::from_fn(n, n, |i, j| if i + j + 1 == n { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
        }
    };
    if epsilon != 0.0 {
        x.axpy(C64::new(epsilon, 0.0), &(&r + &r.transpose()).scale_real(0.5));
    }
    x.symmetrized()
}

/// Minimum-norm symmetric `Ẋ` with `Ẋ·A − Aᵀ·Ẋ = rhs` for antisymmetric `rhs`.
///
/// Unknowns are the lower triangle of `Ẋ` in isometric coordinates
/// (off-diagonals scaled by √2); equations are the strictly lower entries,
/// also scaled by √2, so both norms match the full `n²` problem.
pub fn reduced_symmetric_solve(p: &DenseMatrix, rhs: &[C64], n: usize, rank_tol: f64) -> (Vec<C64>, usize) {
    let sqrt2 = core::f64::consts::SQRT_2;
    let unknowns: Vec<(usize, usize)> = (0..n).flat_map(|j| (j..n).map(move |i| (i, j))).collect();
    let equations: Vec<usize> = (0..n).flat_map(|j| (j + 1..n).map(move |i| i + j * n)).collect();
    let b = DenseMatrix::from_fn(equations.len().max(1), unknowns.len(), |r, c| {
        let Some(&row) = equations.get(r) else {
            return C64::new(0.0, 0.0);
        };
        let (i, j) = unknowns[c];
        if i == j {
            p[(row, i + j * n)] * sqrt2
        } else {
            p[(row, i + j * n)] + p[(row, j + i * n)]
        }
    });
    let mut rhs_r: Vec<C64> = equations.iter().map(|&row| rhs[row] * sqrt2).collect();
    if rhs_r.is_empty() {
        rhs_r.push(C64::new(0.0, 0.0));
    }
    let (y, rank) = min_norm_lstsq(&b, &rhs_r, rank_tol);
    let mut v = alloc::vec![C64::new(0.0, 0.0); n * n];
    for (&(i, j), yc) in unknowns.iter().zip(&y) {
        if i == j {
            v[i + j * n] = *yc;
        } else {
            let s = yc / sqrt2;
            v[i + j * n] = s;
            v[j + i * n] = s;
        }
    }
    (v, rank)
}

impl ProblemAdapter for SymmetrizerAdapter {
    fn dim(&self) -> usize {
        self.n
    }

    fn name(&self) -> &'static str {
        "symmetrizer"
    }

    fn initial_guess(&self, _a0: &DenseMatrix) -> DenseMatrix {
        symm_initial_guess(self.n, self.seed, self.epsilon, self.start)
    }

    fn build_system(&self, x: &DenseMatrix, t: f64, eta: f64, flow: &dyn MatrixFlow) -> Result<(DenseMatrix, Vec<C64>)> {
        symm_build_system(x, t, eta, flow)
    }

    fn residual(&self, a: &DenseMatrix, x: &DenseMatrix) -> Result<f64> {
        symm_residual(a, x)
    }

    fn enforce_structure(&self, x: DenseMatrix) -> DenseMatrix {
        if self.enforce_symmetry { x.symmetrized() } else { x }
    }

    fn solve_step(&self, x: &DenseMatrix, t: f64, eta: f64, flow: &dyn MatrixFlow) -> Result<SolveReport> {
        let (p, q) = self.build_system(x, t, eta, flow)?;
        match self.solve {
            SymmetrizerSolve::Full => solve(&p, &q, self.rank_tol),
            SymmetrizerSolve::Reduced => {
                if !p.is_finite() || !q.iter().all(|z| z.is_finite()) {
                    return Err(Error::NonFinite { op: "symmetrizer system" });
                }
                let (solution, rank_estimate) = reduced_symmetric_solve(&p, &q, self.n, self.rank_tol);
                let r: Vec<C64> = p.mul_vec(&solution).iter().zip(&q).map(|(a, b)| a - b).collect();
                Ok(SolveReport {
                    residual_norm: crate::linalg::frobenius(&r),
                    solution,
                    method: SolveMethod::LeastSquaresPseudoinverse,
                    rank_estimate,
                })
            }
        }
    }
}

fn check_square(op: &'static str, x: &DenseMatrix, n: usize) -> Result<()> {
    if !x.is_square() || x.rows() != n {
        return Err(Error::DimensionMismatch {
            op,
            detail: alloc::format!("X is {}x{}, flow has dimension {n}", x.rows(), x.cols()),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{trial_flow_squared, ConstantFlow};
    use crate::linalg::condition_and_rank;
    use crate::testutil::random_matrix;
    use proptest::prelude::*;

    fn dist(a: &[C64], b: &[C64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn sqrt_system_at_identity() {
        let flow = ConstantFlow::new(DenseMatrix::identity(2));
        let (p, q) = sqrt_build_system(&DenseMatrix::identity(2), 0.0, 3.0, &flow).unwrap();
        assert_eq!(p, DenseMatrix::identity(4).scale_real(2.0));
        assert!(q.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn sqrt_guess_is_principal() {
        let a = DenseMatrix::from_real_rows(&[[4.0, -1.0], [0.0, 4.0]]).unwrap();
        let g = sqrt_initial_guess(&a);
        assert_eq!(g[(0, 0)], C64::new(2.0, 0.0));
        assert_eq!(g[(0, 1)], C64::new(0.0, 1.0));
        assert_eq!(g[(1, 0)], C64::new(0.0, 0.0));
    }

    #[test]
    fn sqrt_guess_on_trial_flow_is_sane() {
        let f = trial_flow_squared(3, 7).unwrap();
        let a = f.value(10.0).unwrap();
        assert!(sqrt_residual(&a, &sqrt_initial_guess(&a)) < 10.0);
    }

    #[test]
    fn symm_system_at_identity() {
        let flow = ConstantFlow::new(DenseMatrix::identity(3));
        let x = symm_initial_guess(3, 1, 1e-2, SymmetrizerStart::Identity);
        let (p, q) = symm_build_system(&x, 0.0, 2.0, &flow).unwrap();
        assert_eq!(p.max_abs(), 0.0);
        assert_eq!(q.iter().map(|z| z.norm()).fold(0.0, f64::max), 0.0);
        let rep = SymmetrizerAdapter::new(3, 1).solve_step(&x, 0.0, 2.0, &flow).unwrap();
        assert!(rep.solution.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn symm_operator_rank_for_diag() {
        let a = DenseMatrix::from_real_diag(&[1.0, 2.0]);
        let (_, rank) = condition_and_rank(&symm_operator(&a).unwrap(), 1e-12);
        assert_eq!(rank, 2);
    }

    #[test]
    fn initial_guess_properties() {
        assert_eq!(symm_initial_guess(4, 9, 0.0, SymmetrizerStart::Identity), DenseMatrix::identity(4));
        for seed in 0..100 {
            for n in [2, 5, 10] {
                let x = symm_initial_guess(n, seed, 1e-2, SymmetrizerStart::Identity);
                assert_eq!(x.symmetry_defect(), 0.0);
                let (cond, rank) = condition_and_rank(&x, 1e-12);
                assert_eq!(rank, n);
                assert!(cond <= 1.5, "{cond}");
            }
        }
        let j = symm_initial_guess(3, 0, 0.0, SymmetrizerStart::Exchange);
        assert_eq!(j[(0, 2)], C64::new(1.0, 0.0));
        assert_eq!(j[(1, 1)], C64::new(1.0, 0.0));
        assert_eq!(j[(0, 0)], C64::new(0.0, 0.0));
    }

    #[test]
    fn reduced_solve_matches_full_pseudoinverse() {
        for (n, seed) in [(2, 1), (3, 2), (4, 3), (5, 4)] {
            let a = random_matrix(n, n, seed);
            let ad = random_matrix(n, n, seed + 100);
            let x = random_matrix(n, n, seed + 200).symmetrized();
            let p = symm_operator(&a).unwrap();
            let q = symm_rhs(&x, &a, &ad, 3.0).into_col_major();
            let full = solve(&p, &q, 1e-12).unwrap();
            assert_eq!(full.method, SolveMethod::LeastSquaresPseudoinverse);
            let (red, rank) = reduced_symmetric_solve(&p, &q, n, 1e-12);
            assert_eq!(rank, n * (n - 1) / 2);
            let scale = frob(&full.solution).max(1.0);
            assert!(dist(&red, &full.solution) < 1e-10 * scale, "n={n}");
        }
    }

    fn frob(v: &[C64]) -> f64 {
        crate::linalg::frobenius(v)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn sqrt_operator_identity(n in 2usize..=6, seed in 0u64..1000) {
            let x = random_matrix(n, n, seed);
            let d = random_matrix(n, n, seed + 1);
            let flow = ConstantFlow::new(random_matrix(n, n, seed + 2));
            let (p, _) = sqrt_build_system(&x, 0.0, 1.0, &flow).unwrap();
            let lhs = DenseMatrix::unvec(&p.mul_vec(&d.vec()), n, n).unwrap();
            let rhs = &(&d * &x) + &(&x * &d);
            prop_assert!((&lhs - &rhs).frobenius_norm() <= 1e-12 * rhs.frobenius_norm().max(1.0));
        }

        #[test]
        fn symm_operator_identity(n in 2usize..=6, seed in 0u64..1000) {
            let a = random_matrix(n, n, seed);
            let d = random_matrix(n, n, seed + 1);
            let lhs = DenseMatrix::unvec(&symm_operator(&a).unwrap().mul_vec(&d.vec()), n, n).unwrap();
            let rhs = &(&d * &a) - &(&a.transpose() * &d);
            prop_assert!((&lhs - &rhs).frobenius_norm() <= 1e-12 * rhs.frobenius_norm().max(1.0));
        }

        #[test]
        fn sqrt_rhs_identity(n in 2usize..=5, seed in 0u64..1000, eta in 0.1f64..100.0) {
            let x = random_matrix(n, n, seed);
            let a = random_matrix(n, n, seed + 3);
            let flow = ConstantFlow::new(a.clone());
            let (_, q) = sqrt_build_system(&x, 0.0, eta, &flow).unwrap();
            let expected = (&a - &(&x * &x)).scale_real(eta);
            prop_assert!(dist(&q, &expected.vec()) <= 1e-12 * expected.frobenius_norm().max(1.0));
        }
    }
}
