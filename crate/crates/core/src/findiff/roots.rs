//! Polynomial roots by Aberth–Ehrlich iteration.

use alloc::vec::Vec;

use crate::C64;

const MAX_ITERS: usize = 80;

/// Roots of `Σ coeffs[i]·x^(d−i)` (highest degree first). Leading zeros are
/// dropped; a constant polynomial has no roots.
pub fn poly_roots(coeffs: &[C64]) -> Vec<C64> {
    let start = coeffs.iter().position(|c| c.norm() != 0.0).unwrap_or(coeffs.len());
    let c = &coeffs[start..];
    if c.len() <= 1 {
        return Vec::new();
    }
    let lead = c[0];
    let monic: Vec<C64> = c.iter().map(|x| x / lead).collect();
    let d = monic.len() - 1;
    if d == 1 {
        return alloc::vec![-monic[1]];
    }
    // Fujiwara-style radius for the starting circle.
    let mut radius: f64 = 0.0;
    for (k, a) in monic.iter().enumerate().skip(1) {
        radius = radius.max(libm::pow(a.norm(), 1.0 / k as f64));
    }
    let radius = radius.max(1e-3);
    let mut z: Vec<C64> = (0..d)
        .map(|k| {
            let theta = 2.0 * core::f64::consts::PI * k as f64 / d as f64 + 0.4;
            C64::new(radius * libm::cos(theta), radius * libm::sin(theta))
        })
        .collect();
    let mut prev_step = f64::INFINITY;
    for _ in 0..MAX_ITERS {
        let mut max_step: f64 = 0.0;
        for k in 0..d {
            let (p, dp) = horner(&monic, z[k]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let mut sum = C64::new(0.0, 0.0);
            for (j, zj) in z.iter().enumerate() {
                if j != k {
                    let diff = z[k] - zj;
                    if diff.norm() > 0.0 {
                        sum += diff.inv();
                    }
                }
            }
            let denom = C64::new(1.0, 0.0) - ratio * sum;
            let step = if denom.norm() > 0.0 && denom.is_finite() { ratio / denom } else { ratio };
            if !step.is_finite() {
                continue;
            }
            z[k] -= step;
            max_step = max_step.max(step.norm() / z[k].norm().max(1.0));
        }
        // Clustered roots stall at a rounding floor instead of converging.
        if max_step <= 1e-14 || (max_step <= 1e-7 && max_step >= 0.5 * prev_step) {
            break;
        }
        prev_step = max_step;
    }
    z
}

fn horner(c: &[C64], x: C64) -> (C64, C64) {
    let mut p = c[0];
    let mut dp = C64::new(0.0, 0.0);
    for a in &c[1..] {
        dp = dp * x + p;
        p = p * x + a;
    }
    (p, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(c: &[f64]) -> Vec<C64> {
        c.iter().map(|&x| C64::new(x, 0.0)).collect()
    }

    #[test]
    fn quadratic_roots() {
        let mut r = poly_roots(&real(&[1.0, -3.0, 2.0]));
        r.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((r[0] - 1.0).norm() < 1e-14 && (r[1] - 2.0).norm() < 1e-14);
    }

    #[test]
    fn leading_zeros_and_constants() {
        assert!(poly_roots(&real(&[0.0, 0.0, 5.0])).is_empty());
        let r = poly_roots(&real(&[0.0, 2.0, -1.0]));
        assert_eq!(r, alloc::vec![C64::new(0.5, 0.0)]);
    }

    #[test]
    fn matches_companion_eigenvalues() {
        let c = [1.0, 0.125, -0.75, -0.625, 0.25, 0.3, -0.1];
        let d = c.len() - 1;
        let companion = nalgebra::DMatrix::from_fn(d, d, |i, j| {
            if i == 0 {
                -c[j + 1]
            } else if i == j + 1 {
                1.0
            } else {
                0.0
            }
        });
        let mut oracle: Vec<C64> = companion.complex_eigenvalues().iter().copied().collect();
        let mut ours = poly_roots(&real(&c));
        let key = |z: &C64| (z.re * 1e6).round() as i64 * 1_000_000 + (z.im * 1e6).round() as i64;
        oracle.sort_by_key(key);
        ours.sort_by_key(key);
        for (a, b) in ours.iter().zip(&oracle) {
            assert!((a - b).norm() < 1e-10, "{a} vs {b}");
        }
    }
}
