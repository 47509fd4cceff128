//! Seeded construction of convergent `j_s` formulas.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::Rng;

use super::{check_convergent, poly_roots, FDFormula};
use crate::error::{Error, Result};
use crate::linalg::random::rng;
use crate::linalg::{DenseMatrix, Svd};
use crate::C64;

pub const DEFAULT_DERIVE_SEED: u64 = 20_190_731;
pub const DEFAULT_DERIVE_TRIALS: usize = 4000;

#[derive(Clone, Debug, PartialEq)]
pub struct DeriveOptions {
    pub seed: u64,
    pub trials: usize,
    /// Upper end of the `h = η·τ` window whose root moduli are minimized.
    pub h_max: f64,
    pub h_samples: usize,
}

impl Default for DeriveOptions {
    fn default() -> Self {
        Self { seed: DEFAULT_DERIVE_SEED, trials: DEFAULT_DERIVE_TRIALS, h_max: 0.1, h_samples: 10 }
    }
}

/// Derives a convergent formula on `j + s` points of the highest local
/// order that admits one.
pub fn derive(j: usize, s: usize, seed: u64, trials: usize) -> Result<FDFormula> {
    derive_with(j, s, &DeriveOptions { seed, trials, ..DeriveOptions::default() })
}

pub fn derive_with(j: usize, s: usize, opts: &DeriveOptions) -> Result<FDFormula> {
    if j < 1 || s < 2 {
        return Err(Error::InvalidArgument(alloc::format!("derive needs j >= 1 and s >= 2, got {j}_{s}")));
    }
    let m = j + s;
    let mut best_modulus = f64::INFINITY;
    for order in (1..m).rev() {
        let free = m - 1 - order;
        let params = if free == 0 {
            Vec::new()
        } else {
            let basis = null_basis(m, order);
            let objective = |v: &[f64], bound: f64| match project(&basis, v) {
                Some(c) => bounded_objective(&c, opts.h_max, opts.h_samples, bound),
                None => f64::INFINITY,
            };
            let v = search(free + 1, opts, &objective);
            project(&basis, &v).map(|c| c[m - free..].to_vec()).unwrap_or_else(|| vec![0.0; free])
        };
        let objective = |p: &[f64]| match float_weights(m, order, p) {
            Some(c) => h_window_objective(&c, opts.h_max, opts.h_samples),
            None => f64::INFINITY,
        };
        let float_obj = objective(&params);
        let limits: &[i64] = if free == 0 { &[1] } else { &[100, 1000, 10_000, 100_000, 1_000_000] };
        let mut fallback = None;
        for &limit in limits {
            let exact: Vec<BigRational> = params.iter().map(|&x| rationalize(x, limit)).collect();
            let Some(formula) = exact_formula(j, s, order, &exact) else { continue };
            let rep = check_convergent(&formula);
            let worst = rep.extraneous_root_moduli.first().copied().unwrap_or(0.0);
            best_modulus = best_modulus.min(worst);
            if !rep.pass {
                continue;
            }
            let obj = h_window_objective(&formula.normalized_f64(), opts.h_max, opts.h_samples);
            if obj <= float_obj + 1e-2 {
                return Ok(formula);
            }
            fallback.get_or_insert(formula);
        }
        if let Some(f) = fallback {
            return Ok(f);
        }
    }
    Err(Error::NoConvergentFormula { best_modulus })
}

fn offsets(m: usize) -> Vec<f64> {
    (0..m).map(|i| 1.0 - i as f64).collect()
}

/// Normalized weights with `Σ cᵢ·oᵢ^d = [d = 1]` for `d ≤ order`, the
/// trailing `m − 1 − order` weights set to `free`.
fn float_weights(m: usize, order: usize, free: &[f64]) -> Option<Vec<f64>> {
    let head = order + 1;
    let o = offsets(m);
    let mut a = vec![vec![0.0; head + 1]; head];
    for (d, row) in a.iter_mut().enumerate() {
        for (i, entry) in row.iter_mut().enumerate().take(head) {
            *entry = libm::pow(o[i], d as f64);
        }
        let mut rhs = if d == 1 { 1.0 } else { 0.0 };
        for (k, p) in free.iter().enumerate() {
            rhs -= libm::pow(o[head + k], d as f64) * p;
        }
        row[head] = rhs;
    }
    // Gaussian elimination with partial pivoting on the augmented system.
    for col in 0..head {
        let piv = (col..head).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[piv][col] == 0.0 {
            return None;
        }
        a.swap(col, piv);
        for r in (col + 1)..head {
            let f = a[r][col] / a[col][col];
            for k in col..=head {
                a[r][k] -= f * a[col][k];
            }
        }
    }
    let mut c = vec![0.0; m];
    for r in (0..head).rev() {
        let mut acc = a[r][head];
        for k in (r + 1)..head {
            acc -= a[r][k] * c[k];
        }
        c[r] = acc / a[r][r];
    }
    c[head..].copy_from_slice(free);
    Some(c)
}

/// Orthonormal basis (as columns) of the weights satisfying the homogeneous
/// order conditions `Σ cᵢ·oᵢ^d = 0` for `d = 0` and `2 ≤ d ≤ order`.
fn null_basis(m: usize, order: usize) -> Vec<Vec<f64>> {
    let o = offsets(m);
    let degrees: Vec<usize> = core::iter::once(0).chain(2..=order).collect();
    let rows = DenseMatrix::from_fn(degrees.len(), m, |r, i| {
        let d = degrees[r] as i32;
        let norm = libm::sqrt(o.iter().map(|x| libm::pow(*x, 2.0 * d as f64)).sum::<f64>());
        C64::new(libm::pow(o[i], d as f64) / norm, 0.0)
    });
    let svd = Svd::new(&rows);
    (degrees.len()..m).map(|k| svd.v.col(k).iter().map(|z| z.re).collect()).collect()
}

/// `N·v` rescaled so that `Σ cᵢ·oᵢ = 1`.
fn project(basis: &[Vec<f64>], v: &[f64]) -> Option<Vec<f64>> {
    let m = basis[0].len();
    let mut c = vec![0.0; m];
    for (col, x) in basis.iter().zip(v) {
        for (ci, b) in c.iter_mut().zip(col) {
            *ci += b * x;
        }
    }
    let o = offsets(m);
    let s: f64 = c.iter().zip(&o).map(|(a, b)| a * b).sum();
    let size = c.iter().map(|x| x.abs()).fold(0.0, f64::max);
    // Huge normalized weights amplify rounding in the recursion.
    if !(s.abs() > 1e-4 * size) {
        return None;
    }
    c.iter_mut().for_each(|x| *x /= s);
    Some(c)
}

/// Worst root modulus of the scalar ZNN recursion over `h ∈ [0, h_max]`,
/// ignoring the principal root (the one tracking `1 − h`) unless it leaves
/// the unit disc.
pub(crate) fn h_window_objective(c: &[f64], h_max: f64, samples: usize) -> f64 {
    bounded_objective(c, h_max, samples, f64::INFINITY)
}

/// As [`h_window_objective`], but may stop early once the value reaches `bound`.
fn bounded_objective(c: &[f64], h_max: f64, samples: usize, bound: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..=samples {
        if worst >= bound {
            break;
        }
        let h = if samples == 0 { 0.0 } else { h_max * k as f64 / samples as f64 };
        let mut coeffs: Vec<C64> = c.iter().map(|&x| C64::new(x, 0.0)).collect();
        coeffs[1] += h;
        let roots = poly_roots(&coeffs);
        let target = 1.0 - h;
        let Some(principal) = roots
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - target).norm().total_cmp(&(b.1 - target).norm()))
            .map(|(i, _)| i)
        else {
            continue;
        };
        for (i, z) in roots.iter().enumerate() {
            let r = z.norm();
            if !r.is_finite() {
                return f64::INFINITY;
            }
            if i != principal || (h > 0.0 && r >= 1.0) {
                worst = worst.max(r);
            }
        }
    }
    worst
}

/// Seeded uniform sampling of projective coordinates followed by Nelder–Mead refinement of the best few.
fn search(dim: usize, opts: &DeriveOptions, objective: &dyn Fn(&[f64], f64) -> f64) -> Vec<f64> {
    const KEEP: usize = 4;
    let mut r = rng(opts.seed);
    let mut kept: Vec<(f64, Vec<f64>)> = Vec::with_capacity(KEEP + 1);
    for _ in 0..opts.trials.max(1) {
        let p: Vec<f64> = (0..dim).map(|_| r.random_range(-1.0..1.0)).collect();
        let bound = if kept.len() < KEEP { f64::INFINITY } else { kept[KEEP - 1].0 };
        let v = objective(&p, bound);
        if v < bound {
            let at = kept.iter().position(|k| v < k.0).unwrap_or(kept.len());
            kept.insert(at, (v, p));
            kept.truncate(KEEP);
        }
    }
    let mut best = kept[0].clone();
    for (_, start) in kept {
        let refined = nelder_mead(&start, 0.05, 400 * dim, objective);
        if refined.0 < best.0 {
            best = refined;
        }
    }
    best.1
}

fn nelder_mead(start: &[f64], step: f64, iters: usize, obj: &dyn Fn(&[f64], f64) -> f64) -> (f64, Vec<f64>) {
    let f = |p: &[f64]| obj(p, f64::INFINITY);
    let n = start.len();
    let mut simplex: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n + 1);
    simplex.push((f(start), start.to_vec()));
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += step;
        simplex.push((f(&p), p));
    }
    for _ in 0..iters {
        simplex.sort_by(|a, b| a.0.total_cmp(&b.0));
        if (simplex[n].0 - simplex[0].0).abs() <= 1e-13 {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (_, p) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(p) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[n].1).map(|(c, w)| c + t * (w - c)).collect()
        };
        // Bounded evaluations are exact whenever the point is kept.
        let xr = along(-1.0);
        let fr = obj(&xr, simplex[n].0);
        if fr < simplex[0].0 {
            let xe = along(-2.0);
            let fe = obj(&xe, fr);
            simplex[n] = if fe < fr { (fe, xe) } else { (fr, xr) };
        } else if fr < simplex[n - 1].0 {
            simplex[n] = (fr, xr);
        } else {
            let xc = if fr < simplex[n].0 { along(-0.5) } else { along(0.5) };
            let fc = obj(&xc, simplex[n].0.min(fr));
            if fc < simplex[n].0.min(fr) {
                simplex[n] = (fc, xc);
            } else {
                let best = simplex[0].1.clone();
                for v in simplex.iter_mut().skip(1) {
                    let p: Vec<f64> = best.iter().zip(&v.1).map(|(b, x)| b + 0.5 * (x - b)).collect();
                    *v = (f(&p), p);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.0.total_cmp(&b.0));
    simplex.swap_remove(0)
}

/// Best rational approximation with denominator at most `max_den`.
fn rationalize(x: f64, max_den: i64) -> BigRational {
    let (mut h0, mut h1, mut k0, mut k1) = (0i128, 1i128, 1i128, 0i128);
    let mut v = x;
    for _ in 0..64 {
        let a = libm::floor(v);
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > max_den as i128 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = v - a;
        if frac < 1e-12 {
            break;
        }
        v = 1.0 / frac;
    }
    BigRational::new(BigInt::from(h1), BigInt::from(k1))
}

/// Exact weights for given rational free parameters, scaled to coprime
/// integers over an integer `tau_scale`.
fn exact_formula(j: usize, s: usize, order: usize, free: &[BigRational]) -> Option<FDFormula> {
    let m = j + s;
    let head = order + 1;
    let o: Vec<BigRational> = (0..m).map(|i| BigRational::from_integer(BigInt::from(1 - i as i64))).collect();
    let pow = |x: &BigRational, d: usize| (0..d).fold(BigRational::one(), |acc, _| acc * x);
    let mut a: Vec<Vec<BigRational>> = (0..head)
        .map(|d| {
            let mut row: Vec<BigRational> = (0..head).map(|i| pow(&o[i], d)).collect();
            let mut rhs = if d == 1 { BigRational::one() } else { BigRational::zero() };
            for (k, p) in free.iter().enumerate() {
                rhs -= pow(&o[head + k], d) * p;
            }
            row.push(rhs);
            row
        })
        .collect();
    for col in 0..head {
        let piv = (col..head).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, piv);
        for r in (col + 1)..head {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &a[col][col];
            for k in col..=head {
                let delta = &f * &a[col][k];
                a[r][k] -= delta;
            }
        }
    }
    let mut c = vec![BigRational::zero(); m];
    for r in (0..head).rev() {
        let mut acc = a[r][head].clone();
        for k in (r + 1)..head {
            acc -= &a[r][k] * &c[k];
        }
        c[r] = acc / &a[r][r];
    }
    for (dst, p) in c[head..].iter_mut().zip(free) {
        *dst = p.clone();
    }
    let lcm = c.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = c.iter().map(|x| (x * BigRational::from_integer(lcm.clone())).to_integer()).collect();
    let g = ints.iter().fold(lcm.clone(), |acc, x| acc.gcd(x));
    let weights = ints.iter().map(|x| BigRational::from_integer(x / &g)).collect();
    let mut scale = lcm / &g;
    if scale.is_negative() {
        scale = -scale;
    }
    FDFormula::new(j, s, weights, BigRational::from_integer(scale)).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::findiff::{builtin, empirical_order, FormulaKind};

    #[test]
    fn euler_is_unique_two_point_formula() {
        for seed in [0, 1, 99] {
            let f = derive(1, 2, seed, 10).unwrap();
            assert_eq!(f, builtin(FormulaKind::Euler12));
        }
    }

    #[test]
    fn derived_2_3_is_convergent_fourth_order() {
        let f = derive(2, 3, DEFAULT_DERIVE_SEED, 500).unwrap();
        assert!(f.local_order >= 4);
        assert!(check_convergent(&f).pass);
        assert!(check_convergent(&builtin(FormulaKind::FiveIfd23)).pass);
    }

    #[test]
    fn frozen_4_5_matches_derivation() {
        let f = derive(4, 5, DEFAULT_DERIVE_SEED, DEFAULT_DERIVE_TRIALS).unwrap();
        assert_eq!(f, builtin(FormulaKind::FourFive45));
    }

    #[test]
    fn derived_4_5_empirical_order() {
        let f = builtin(FormulaKind::FourFive45);
        let exp = |t: f64| (t.exp(), t.exp());
        let slope = empirical_order(&f, &exp, &[0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002]).unwrap();
        assert!(slope >= 5.0 - 0.3, "{slope}");
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let a = derive(3, 3, 5, 300).unwrap();
        let b = derive(3, 3, 5, 300).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_types() {
        assert!(matches!(derive(0, 3, 1, 10), Err(Error::InvalidArgument(_))));
        assert!(matches!(derive(2, 1, 1, 10), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn rationalize_recovers_simple_fractions() {
        assert_eq!(rationalize(0.375, 100), BigRational::new(3.into(), 8.into()));
        assert_eq!(rationalize(-1.0 / 3.0, 100), BigRational::new((-1).into(), 3.into()));
    }
}
