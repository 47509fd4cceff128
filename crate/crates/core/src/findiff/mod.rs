//! Look-ahead finite difference formulas of type `j_s`.
//!
//! A formula on `m = j + s` points estimates
//! `ż_k ≈ (w₀·z_{k+1} + w₁·z_k + … + w_{m−1}·z_{k−m+2}) / (tau_scale·τ)`.
//! Solving that relation for `z_{k+1}` gives the ZNN prediction step.

mod derive;
mod roots;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::C64;

pub use derive::{derive, derive_with, DeriveOptions, DEFAULT_DERIVE_SEED, DEFAULT_DERIVE_TRIALS};
pub use roots::poly_roots;

/// Extraneous roots must stay this far inside the unit circle.
pub const STABILITY_MARGIN: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FormulaKind {
    Euler12,
    FiveIfd23,
    FourFive45,
}

impl FormulaKind {
    pub fn label(self) -> &'static str {
        match self {
            FormulaKind::Euler12 => "1_2",
            FormulaKind::FiveIfd23 => "2_3",
            FormulaKind::FourFive45 => "4_5",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "1_2" | "euler" | "euler_1_2" => Some(FormulaKind::Euler12),
            "2_3" | "5ifd" | "fiveifd_2_3" => Some(FormulaKind::FiveIfd23),
            "4_5" | "four_five_4_5" => Some(FormulaKind::FourFive45),
            _ => None,
        }
    }
}

/// A look-ahead finite difference rule with exact rational weights.
#[derive(Clone, Debug, PartialEq)]
pub struct FDFormula {
    pub j: usize,
    pub s: usize,
    pub future_weight: BigRational,
    /// Coefficients of `z_k, z_{k−1}, …`.
    pub past_weights: Vec<BigRational>,
    pub tau_scale: BigRational,
    /// The estimate is exact on polynomials of degree `< local_order`.
    pub local_order: usize,
    future_f64: f64,
    past_f64: Vec<f64>,
    tau_scale_f64: f64,
}

impl FDFormula {
    /// Builds a formula from exact weights `w₀, …` and `tau_scale`.
    ///
    /// Trailing zero weights are dropped, so a formula may use fewer than
    /// `j + s` points (Euler is type `1_2` on two points).
    pub fn new(j: usize, s: usize, mut weights: Vec<BigRational>, tau_scale: BigRational) -> Result<Self> {
        while weights.len() > 2 && weights.last().is_some_and(Zero::is_zero) {
            weights.pop();
        }
        if j == 0 || s == 0 || weights.len() < 2 || weights.len() > j + s {
            return Err(Error::InvalidArgument(alloc::format!(
                "type {j}_{s} takes 2 to {} weights, got {}",
                j + s,
                weights.len()
            )));
        }
        if weights[0].is_zero() || tau_scale.is_zero() {
            return Err(Error::InvalidArgument("future weight and tau scale must be nonzero".into()));
        }
        let local_order = exact_order(&weights, &tau_scale);
        let mut it = weights.into_iter();
        let future_weight = it.next().unwrap_or_else(BigRational::one);
        let past_weights: Vec<BigRational> = it.collect();
        Ok(Self {
            j,
            s,
            future_f64: to_f64(&future_weight),
            past_f64: past_weights.iter().map(to_f64).collect(),
            tau_scale_f64: to_f64(&tau_scale),
            future_weight,
            past_weights,
            tau_scale,
            local_order,
        })
    }

    /// Integer weights over an integer `tau_scale`.
    pub fn from_integers(j: usize, s: usize, weights: &[i64], tau_scale: i64) -> Result<Self> {
        let w = weights.iter().map(|&x| BigRational::from_integer(BigInt::from(x))).collect();
        Self::new(j, s, w, BigRational::from_integer(BigInt::from(tau_scale)))
    }

    /// Number of solution points the rule touches.
    pub fn points(&self) -> usize {
        self.past_weights.len() + 1
    }

    /// History entries consumed by [`predict_next`].
    pub fn history_len(&self) -> usize {
        self.past_weights.len()
    }

    pub fn label(&self) -> String {
        alloc::format!("{}_{}", self.j, self.s)
    }

    /// All weights `w₀, …, w_{m−1}` as floats.
    pub fn weights_f64(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.points());
        w.push(self.future_f64);
        w.extend_from_slice(&self.past_f64);
        w
    }

    pub fn tau_scale_f64(&self) -> f64 {
        self.tau_scale_f64
    }

    /// Coefficients of the normalized characteristic polynomial
    /// `x^{m−1} + (w₁/w₀)·x^{m−2} + … + w_{m−1}/w₀`, highest degree first.
    pub fn char_poly(&self) -> Vec<BigRational> {
        let mut c = Vec::with_capacity(self.points());
        c.push(BigRational::one());
        c.extend(self.past_weights.iter().map(|w| w / &self.future_weight));
        c
    }

    /// Weights divided by `tau_scale`, so that `Σ cᵢ·oᵢ = 1` for offsets `oᵢ = 1 − i`.
    pub(crate) fn normalized_f64(&self) -> Vec<f64> {
        self.weights_f64().iter().map(|w| w / self.tau_scale_f64).collect()
    }
}

impl fmt::Display for FDFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ż_k ≈ ({}·z_(k+1)", self.future_weight)?;
        for (i, w) in self.past_weights.iter().enumerate() {
            let idx = if i == 0 { String::from("k") } else { alloc::format!("k-{i}") };
            if w.is_negative() {
                write!(f, " - {}·z_({idx})", -w.clone())?;
            } else {
                write!(f, " + {}·z_({idx})", w)?;
            }
        }
        write!(f, ") / ({}·τ)", self.tau_scale)
    }
}

fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Largest `L` with `Σ wᵢ·oᵢ^d = [d = 1]·tau_scale` for all `d < L`.
fn exact_order(weights: &[BigRational], tau_scale: &BigRational) -> usize {
    let offsets: Vec<BigRational> =
        (0..weights.len()).map(|i| BigRational::from_integer(BigInt::from(1 - i as i64))).collect();
    let mut powers: Vec<BigRational> = alloc::vec![BigRational::one(); weights.len()];
    let mut order = 0;
    for d in 0..=weights.len() + 1 {
        let sum = weights.iter().zip(&powers).fold(BigRational::zero(), |acc, (w, p)| acc + w * p);
        let target = if d == 1 { tau_scale.clone() } else { BigRational::zero() };
        if sum != target {
            break;
        }
        order = d + 1;
        for (p, o) in powers.iter_mut().zip(&offsets) {
            *p = &*p * o;
        }
    }
    order
}

/// The built-in formulas.
pub fn builtin(kind: FormulaKind) -> FDFormula {
    let f = match kind {
        FormulaKind::Euler12 => FDFormula::from_integers(1, 2, &[1, -1], 1),
        FormulaKind::FiveIfd23 => FDFormula::from_integers(2, 3, &[8, 1, -6, -5, 2], 18),
        FormulaKind::FourFive45 => FDFormula::from_integers(4, 5, &FOUR_FIVE_WEIGHTS, FOUR_FIVE_TAU_SCALE),
    };
    f.expect("built-in formulas are well formed")
}

// Output of `derive(4, 5, DEFAULT_DERIVE_SEED, DEFAULT_DERIVE_TRIALS)`.
const FOUR_FIVE_WEIGHTS: [i64; 9] =
    [1_493_198, 1_201_155, -1_584_684, -2_136_940, 476_940, 1_023_897, -298_540, -308_016, 132_990];
const FOUR_FIVE_TAU_SCALE: i64 = 4_235_220;

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub p_at_1: f64,
    pub extraneous_root_moduli: Vec<f64>,
    pub pass: bool,
}

/// Checks `p(1) = 0` and that every root of `p(x)/(x − 1)` lies within
/// `1 − STABILITY_MARGIN` of the origin.
pub fn check_convergent(f: &FDFormula) -> ConvergenceReport {
    let p = f.char_poly();
    let p1 = p.iter().fold(BigRational::zero(), |acc, c| acc + c);
    // Synthetic division by (x − 1).
    let mut quotient = Vec::with_capacity(p.len() - 1);
    let mut carry = BigRational::zero();
    for c in &p[..p.len() - 1] {
        carry += c;
        quotient.push(carry.clone());
    }
    let q: Vec<C64> = quotient.iter().map(|c| C64::new(to_f64(c), 0.0)).collect();
    let mut moduli: Vec<f64> = poly_roots(&q).iter().map(|z| z.norm()).collect();
    moduli.sort_by(|a, b| b.total_cmp(a));
    let p_at_1 = to_f64(&p1).abs();
    let pass = p_at_1 <= 1e-12 && moduli.iter().all(|&m| m <= 1.0 - STABILITY_MARGIN);
    ConvergenceReport { p_at_1, extraneous_root_moduli: moduli, pass }
}

/// Least-squares slope of `log(max error)` against `log(τ)` for the
/// derivative estimate at a few base points. `test(t)` returns `(z(t), ż(t))`.
pub fn empirical_order(f: &FDFormula, test: &dyn Fn(f64) -> (f64, f64), tau_list: &[f64]) -> Result<f64> {
    if tau_list.len() < 3 {
        return Err(Error::InvalidArgument("need at least 3 tau values".into()));
    }
    let (lo, hi) = tau_list.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &t| (lo.min(t), hi.max(t)));
    if !(lo > 0.0) || hi / lo < 99.999 {
        return Err(Error::InvalidArgument("tau values must be positive and span two decades".into()));
    }
    let w = f.weights_f64();
    let scale = f.tau_scale_f64();
    let mut xs = Vec::with_capacity(tau_list.len());
    let mut ys = Vec::with_capacity(tau_list.len());
    for &tau in tau_list {
        let mut err: f64 = 0.0;
        for base in [0.0, 0.5, 1.0] {
            let est: f64 =
                w.iter().enumerate().map(|(i, wi)| wi * test(base + (1.0 - i as f64) * tau).0).sum::<f64>()
                    / (scale * tau);
            err = err.max((est - test(base).1).abs());
        }
        if err < 1e-15 {
            return Err(Error::ErrorUnderflow { tau });
        }
        xs.push(libm::log(tau));
        ys.push(libm::log(err));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// The two parts of the prediction `x_{k+1} = solve_term + recursion_term`.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionTerms {
    /// `(tau_scale·τ / w₀)·ẋ_k`.
    pub solve_term: Vec<C64>,
    /// `−(1/w₀)·Σ wᵢ·history_i`.
    pub recursion_term: Vec<C64>,
}

/// Splits the prediction step into its derivative and history parts.
/// `history` is newest first and must hold at least `j + s − 1` entries.
pub fn predict_terms<H: AsRef<[C64]>>(f: &FDFormula, xdot: &[C64], history: &[H], tau: f64) -> Result<PredictionTerms> {
    let needed = f.history_len();
    if history.len() < needed {
        return Err(Error::InsufficientHistory { needed, got: history.len() });
    }
    let len = xdot.len();
    for h in &history[..needed] {
        if h.as_ref().len() != len {
            return Err(Error::DimensionMismatch {
                op: "predict_next",
                detail: alloc::format!("history entry length {} vs derivative length {len}", h.as_ref().len()),
            });
        }
    }
    let a = f.tau_scale_f64 * tau / f.future_f64;
    let solve_term: Vec<C64> = xdot.iter().map(|x| x * a).collect();
    let recursion_term = if f.local_order >= 1 {
        // Σ cᵢ = 1 exactly, so sum against differences from the newest entry.
        let h0 = history[0].as_ref();
        let mut acc = h0.to_vec();
        for (h, w) in history.iter().zip(&f.past_f64).skip(1) {
            let c = -w / f.future_f64;
            for ((r, x), x0) in acc.iter_mut().zip(h.as_ref()).zip(h0) {
                *r += (x - x0) * c;
            }
        }
        acc
    } else {
        let mut acc = alloc::vec![C64::zero(); len];
        for (h, w) in history.iter().zip(&f.past_f64) {
            let c = -w / f.future_f64;
            for (r, x) in acc.iter_mut().zip(h.as_ref()) {
                *r += x * c;
            }
        }
        acc
    };
    Ok(PredictionTerms { solve_term, recursion_term })
}

/// `x_{k+1} = (tau_scale·τ/w₀)·ẋ_k − (1/w₀)·Σ wᵢ·history_i`.
pub fn predict_next<H: AsRef<[C64]>>(f: &FDFormula, xdot: &[C64], history: &[H], tau: f64) -> Result<Vec<C64>> {
    let t = predict_terms(f, xdot, history, tau)?;
    Ok(t.solve_term.iter().zip(&t.recursion_term).map(|(a, b)| a + b).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn euler_is_the_secant_rule() {
        let e = builtin(FormulaKind::Euler12);
        assert_eq!(e.weights_f64(), alloc::vec![1.0, -1.0]);
        assert_eq!(e.tau_scale_f64(), 1.0);
        assert_eq!(e.local_order, 2);
        let rep = check_convergent(&e);
        assert!(rep.pass && rep.extraneous_root_moduli.is_empty());
    }

    #[test]
    fn five_ifd_weights_and_recursion() {
        let f = builtin(FormulaKind::FiveIfd23);
        assert_eq!(f.weights_f64(), alloc::vec![8.0, 1.0, -6.0, -5.0, 2.0]);
        assert_eq!(f.tau_scale, r(18, 1));
        assert_eq!(f.char_poly(), alloc::vec![r(1, 1), r(1, 8), r(-3, 4), r(-5, 8), r(1, 4)]);
        let sum = f.char_poly().iter().fold(BigRational::zero(), |a, b| a + b);
        assert!(sum.is_zero());
        assert_eq!(f.local_order, 4);
        let rep = check_convergent(&f);
        assert!(rep.pass);
        assert_eq!(rep.p_at_1, 0.0);
    }

    #[test]
    fn double_root_at_one_fails() {
        assert!(FDFormula::from_integers(1, 1, &[1, -2, 1], 1).is_err());
        let f = FDFormula::from_integers(1, 2, &[1, -2, 1], 1).unwrap();
        let rep = check_convergent(&f);
        assert!(!rep.pass);
        assert!((rep.extraneous_root_moduli[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empirical_orders_of_builtins() {
        let sin = |t: f64| (t.sin(), t.cos());
        let exp = |t: f64| (t.exp(), t.exp());
        let e = empirical_order(&builtin(FormulaKind::Euler12), &sin, &[0.1, 0.03, 0.01, 0.003, 0.001]).unwrap();
        assert!((e - 1.0).abs() <= 0.15, "{e}");
        let f = empirical_order(&builtin(FormulaKind::FiveIfd23), &exp, &[0.1, 0.03, 0.01, 0.003, 0.001]).unwrap();
        assert!((f - 3.0).abs() <= 0.2, "{f}");
    }

    #[test]
    fn empirical_order_preconditions() {
        let exp = |t: f64| (t.exp(), t.exp());
        let f = builtin(FormulaKind::FiveIfd23);
        assert!(matches!(empirical_order(&f, &exp, &[0.1, 0.01]), Err(Error::InvalidArgument(_))));
        assert!(matches!(empirical_order(&f, &exp, &[0.1, 0.05, 0.02]), Err(Error::InvalidArgument(_))));
        let lin = |t: f64| (2.0 * t, 2.0);
        assert!(matches!(empirical_order(&f, &lin, &[0.1, 0.01, 0.001]), Err(Error::ErrorUnderflow { .. })));
    }

    #[test]
    fn euler_prediction_is_forward_step() {
        let e = builtin(FormulaKind::Euler12);
        let x = predict_next(&e, &[c(2.0)], &[[c(1.0)]], 0.1).unwrap();
        assert!((x[0] - 1.2).norm() < 1e-15);
    }

    #[test]
    fn insufficient_history_is_reported() {
        let f = builtin(FormulaKind::FiveIfd23);
        let err = predict_next(&f, &[c(0.0)], &[[c(1.0)]; 3], 0.1).unwrap_err();
        assert_eq!(err, Error::InsufficientHistory { needed: 4, got: 3 });
    }

    #[test]
    fn five_ifd_predicts_quadratic() {
        // z = t², ż = 2t; the formula is exact on cubics.
        let f = builtin(FormulaKind::FiveIfd23);
        let tau = 0.05;
        let tk = 1.3;
        let hist: Vec<[C64; 1]> = (0..4).map(|i| [c((tk - i as f64 * tau).powi(2))]).collect();
        let x = predict_next(&f, &[c(2.0 * tk)], &hist, tau).unwrap();
        assert!((x[0].re - (tk + tau).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn display_shows_rationals() {
        let f = builtin(FormulaKind::FiveIfd23);
        let s = alloc::format!("{f}");
        assert!(s.starts_with("ż_k ≈ (8·z_(k+1) + 1·z_(k) - 6·z_(k-1)"), "{s}");
        assert!(s.ends_with("/ (18·τ)"));
    }

    fn all_formulas() -> Vec<FDFormula> {
        [FormulaKind::Euler12, FormulaKind::FiveIfd23, FormulaKind::FourFive45].into_iter().map(builtin).collect()
    }

    proptest! {
        #[test]
        fn constancy_is_preserved(value in -1e3f64..1e3, tau in 1e-4f64..1.0) {
            for f in all_formulas() {
                let hist = alloc::vec![[c(value)]; f.history_len()];
                let x = predict_next(&f, &[c(0.0)], &hist, tau).unwrap();
                prop_assert!((x[0].re - value).abs() <= 1e-12 * value.abs().max(1.0));
            }
        }

        #[test]
        fn polynomials_below_local_order_are_reproduced(
            coeffs in proptest::collection::vec(-2.0f64..2.0, 10),
            tk in -1.0f64..1.0,
            tau in 0.01f64..0.2,
        ) {
            for f in all_formulas() {
                let deg = f.local_order - 1;
                let z = |t: f64| coeffs[..=deg].iter().rev().fold(0.0, |acc, a| acc * t + a);
                let dz = |t: f64| {
                    coeffs[1..=deg].iter().enumerate().rev().fold(0.0, |acc, (i, a)| acc * t + (i + 1) as f64 * a)
                };
                let hist: Vec<[C64; 1]> = (0..f.history_len()).map(|i| [c(z(tk - i as f64 * tau))]).collect();
                let x = predict_next(&f, &[c(dz(tk))], &hist, tau).unwrap();
                let exact = z(tk + tau);
                let scale = hist.iter().map(|h| h[0].norm()).fold(exact.abs(), f64::max).max(1.0);
                prop_assert!((x[0].re - exact).abs() <= 1e-10 * scale, "{} {} {}", f.label(), x[0].re, exact);
            }
        }
    }
}
