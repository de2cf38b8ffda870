//! Brute-force oracles backing the derived expectations in the test suite.
//! Each oracle recomputes a quantity along an independent path: exhaustive
//! enumeration for the common grid, dense grids plus golden-section for
//! polynomial suprema, dense lifts for compact adjoints, cyclic Jacobi for
//! eigenvalue problems, and Durand–Kerner rooting for critical points.

#![allow(dead_code)]

use mrss_core::commongrid::CommonGrid;
use mrss_core::gram::{toeplitz_adjoint, HermitianMatrix};
use mrss_core::model::SamplingGrid;
use mrss_core::rational::Rational;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::TAU;

/// Exhaustive common-grid search: for each multiple `k` of the base rate,
/// check in exact arithmetic that every sampler instant lands on an integer
/// index of the candidate grid; return the first success.
pub fn oracle_common_grid(grids: &[SamplingGrid], k_max: u64) -> Option<CommonGrid> {
    let mut base = grids[0].rate;
    for g in &grids[1..] {
        base = Rational::lcm(base, g.rate);
    }
    for k in 1..=k_max {
        let rate = base * k as i64;
        let mut instants: Vec<Rational> = Vec::new();
        for g in grids {
            for sample in 0..g.count {
                instants.push(g.instant(sample) * rate);
            }
        }
        let first_fract = instants[0].fract();
        if instants.iter().any(|t| t.fract() != first_fract) {
            continue;
        }
        let min = instants.iter().copied().fold(instants[0], |a, b| a.min(b));
        let max = instants.iter().copied().fold(instants[0], |a, b| a.max(b));
        let delay = -min;
        let count = (max - min).to_integer() as usize + 1;
        let multipliers: Vec<u64> = grids
            .iter()
            .map(|g| (rate / g.rate).to_integer() as u64)
            .collect();
        let offsets: Vec<i64> = grids
            .iter()
            .zip(&multipliers)
            .map(|(g, &l)| (g.delay * l as i64 - delay).to_integer())
            .collect();
        return Some(CommonGrid {
            rate_star: rate,
            delay_star: delay,
            count_star: count,
            multipliers,
            offsets,
        });
    }
    None
}

/// Supremum of `|Q(e^{iω})|` over the circle: a 2^16-point scan followed by
/// golden-section refinement around the eight best grid candidates.
pub fn oracle_poly_infnorm(support: &[usize], coeffs: &[Complex64]) -> f64 {
    let eval = |omega: f64| -> f64 {
        support
            .iter()
            .zip(coeffs)
            .map(|(&k, &u)| u * Complex64::new(0.0, k as f64 * omega).exp())
            .sum::<Complex64>()
            .norm_sqr()
    };
    let points = 1usize << 16;
    let spacing = TAU / points as f64;
    let mut samples: Vec<(f64, usize)> = (0..points)
        .map(|t| (eval(t as f64 * spacing), t))
        .collect();
    samples.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut best = samples[0].0;
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    for &(_, t) in samples.iter().take(8) {
        let mut lo = (t as f64 - 1.0) * spacing;
        let mut hi = (t as f64 + 1.0) * spacing;
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let mut f1 = eval(x1);
        let mut f2 = eval(x2);
        for _ in 0..120 {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = eval(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = eval(x1);
            }
        }
        best = best.max(f1).max(f2);
    }
    best.sqrt()
}

/// Materializes the dense `n_* × n_*` lift `C_ℐ S C_ℐᴴ` and applies the
/// plain Toeplitz adjoint to it.
pub fn oracle_dense_lift(
    s: &HermitianMatrix,
    support: &[usize],
    n_star: usize,
) -> Vec<Complex64> {
    let mut dense = DMatrix::from_element(n_star, n_star, Complex64::new(0.0, 0.0));
    for (p, &i) in support.iter().enumerate() {
        for (q, &j) in support.iter().enumerate() {
            dense[(i, j)] = s.get(p, q);
        }
    }
    let lifted = HermitianMatrix::from_dense(&dense).expect("lift of Hermitian is Hermitian");
    toeplitz_adjoint(&lifted)
}

/// Cyclic Jacobi eigendecomposition of a real symmetric matrix; an algorithm
/// independent of the tridiagonalization-based one used by the solver.
/// Returns (eigenvalues, eigenvectors-as-columns), unordered.
pub fn jacobi_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a[(i, j)] * a[(i, j)];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + a.norm()) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)]).collect(), v)
}

/// PSD projection through the Jacobi decomposition.
pub fn jacobi_psd_project(m: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (m + m.transpose()) * 0.5;
    let (vals, vecs) = jacobi_eigen(&sym);
    let clipped = nalgebra::DVector::from_iterator(vals.len(), vals.iter().map(|l| l.max(0.0)));
    &vecs * DMatrix::from_diagonal(&clipped) * vecs.transpose()
}

/// Durand–Kerner roots of a complex polynomial given by its coefficients
/// (constant term first). Deterministic initialization.
pub fn durand_kerner_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let degree = coeffs.len() - 1;
    assert!(degree >= 1);
    let lead = coeffs[degree];
    let monic: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();
    let eval = |z: Complex64| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in monic.iter().rev() {
            acc = acc * z + c;
        }
        acc
    };
    // Roots of our critical-point polynomials lie on the unit circle; seed
    // near it with an irrational twist so no seed coincides with a root.
    let mut roots: Vec<Complex64> = (0..degree)
        .map(|k| Complex64::from_polar(1.1, TAU * (k as f64 + 0.3731) / degree as f64))
        .collect();
    for _ in 0..400 {
        let mut shift = 0.0f64;
        let snapshot = roots.clone();
        for i in 0..degree {
            let mut denom = Complex64::new(1.0, 0.0);
            for (j, &r) in snapshot.iter().enumerate() {
                if j != i {
                    denom *= snapshot[i] - r;
                }
            }
            let delta = eval(snapshot[i]) / denom;
            roots[i] = snapshot[i] - delta;
            shift = shift.max(delta.norm());
        }
        if shift < 1e-13 {
            break;
        }
    }
    roots
}

/// Supremum of `|Q|` via critical-point enumeration: roots of the derivative
/// of `|Q(e^{iω})|²` as a polynomial on the circle.
pub fn critical_point_infnorm(support: &[usize], coeffs: &[Complex64]) -> f64 {
    let n = support.iter().copied().max().unwrap_or(0);
    // Autocorrelation ρ_d for d = -n..n.
    let mut dense = vec![Complex64::new(0.0, 0.0); n + 1];
    for (&k, &u) in support.iter().zip(coeffs) {
        dense[k] = u;
    }
    let rho = |d: i64| -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..=n as i64 {
            let j = i + d;
            if (0..=n as i64).contains(&j) {
                acc += dense[j as usize] * dense[i as usize].conj();
            }
        }
        acc
    };
    // d/dω |Q|² = Σ_d i·d·ρ_d e^{idω}; multiply by z^n to get a polynomial.
    let mut poly = vec![Complex64::new(0.0, 0.0); 2 * n + 1];
    for d in -(n as i64)..=(n as i64) {
        poly[(d + n as i64) as usize] = Complex64::new(0.0, d as f64) * rho(d);
    }
    while poly.len() > 1 && poly.last().map_or(false, |c| c.norm() < 1e-14) {
        poly.pop();
    }
    let eval_q = |omega: f64| -> f64 {
        support
            .iter()
            .zip(coeffs)
            .map(|(&k, &u)| u * Complex64::new(0.0, k as f64 * omega).exp())
            .sum::<Complex64>()
            .norm()
    };
    let mut best = eval_q(0.0);
    if poly.len() > 1 {
        for root in durand_kerner_roots(&poly) {
            if (root.norm() - 1.0).abs() < 1e-6 {
                best = best.max(eval_q(root.arg()));
            }
        }
    }
    best
}
