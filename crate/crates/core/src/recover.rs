//! Frequency localization and amplitude recovery from the dual optimum.
//!
//! The optimal dual vector defines the sparse polynomial
//! `Q_*(z) = Σ_{κ∈ℐ} c_κ z^κ` whose modulus touches one on the unit circle
//! exactly at the signal frequencies: the adjoint identity
//! `Σ_j F_j^*(c_j) = e^{iγ_*ω} Q_*(e^{−iω})` at `ω = 2πξ/f_*` means a peak of
//! `|Q_*(e^{iω})|` at `ω̂` corresponds to the normalized frequency
//! `ν = frac(−ω̂/2π)`. Localization evaluates `|Q_*|²` on a dense grid and
//! polishes each candidate peak with a safeguarded Newton step on the
//! derivative; amplitudes are then refit by least squares on the original
//! observation model.

use crate::commongrid::{
    find_common_grid, merge_collisions, support_set, CommonGrid, GridError, SupportSet,
};
use crate::gram::{GramError, SparsePolynomial};
use crate::model::{unit_phasor, Observations, SamplingGrid};
use crate::sdp::{build_reduced, Residuals, SolveStatus};
use crate::solver::{solve, SolverConfig, SolverError};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecoverError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Gram(#[from] GramError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("solver terminated with status {status} (max residual {residual:.3e})")]
    SolverNotOptimal { status: SolveStatus, residual: f64 },
    #[error("dual polynomial never reaches modulus one; no spike is certified")]
    NoCertificate,
    #[error("dual polynomial has modulus one everywhere; spikes are unidentifiable")]
    DegenerateCertificate,
    #[error("dual polynomial exceeds the unit bound (max modulus {max:.6}); solve is unreliable")]
    CertificateOutOfBounds { max: f64 },
    #[error("amplitude system is ill-conditioned (condition {condition:.3e}); frequencies nearly coincide")]
    IllConditioned { condition: f64 },
}

/// Recovered spikes plus certificate quality numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    /// Strictly increasing frequencies in `[0, f_*)` Hz.
    pub frequencies: Vec<f64>,
    pub amplitudes: Vec<Complex64>,
    /// One minus the largest certificate modulus away from accepted peaks.
    pub certificate_margin: f64,
    /// Relative ℓ₂ misfit of the refit observations.
    pub residual: f64,
}

/// Tuning knobs for peak extraction on the certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizeOptions {
    /// Accept grid local maxima with `|Q| ≥ 1 − peak_threshold`.
    pub peak_threshold: f64,
    /// Evaluation grid has `oversampling · n_*` points.
    pub oversampling: usize,
    /// Merge refined peaks closer than `2π/(merge_divisor · n_*)`.
    pub merge_divisor: f64,
    /// Stop polishing when the step drops below this.
    pub polish_tolerance: f64,
}

impl Default for LocalizeOptions {
    fn default() -> Self {
        LocalizeOptions {
            peak_threshold: 1e-4,
            oversampling: 16,
            merge_divisor: 64.0,
            polish_tolerance: 1e-12,
        }
    }
}

/// Separation of the normalized frequencies against the `4/(n_* − 1)`
/// heuristic carried over from the uniform case. Advisory only: it never
/// blocks a solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparationReport {
    pub satisfied: bool,
    /// `min_separation − threshold`; infinite for a single spike.
    pub margin: f64,
    pub min_separation: f64,
    pub threshold: f64,
}

/// Builds the sparse dual polynomial `q_* = C_ℐ c_*` from the dual optimum.
pub fn dual_polynomial(c_star: &[Complex64], sup: &SupportSet) -> SparsePolynomial {
    SparsePolynomial::new(sup.indices.clone(), c_star.to_vec())
        .expect("support indices are strictly increasing")
}

/// Samples `(ω, |Q(e^{iω})|)` on the localization grid.
pub fn certificate_curve(
    poly: &SparsePolynomial,
    n_star: usize,
    oversampling: usize,
) -> Vec<(f64, f64)> {
    let points = (oversampling * n_star).max(8);
    (0..points)
        .map(|t| {
            let omega = TAU * t as f64 / points as f64;
            (omega, poly.eval(omega).norm())
        })
        .collect()
}

/// Finds the pulsations `ω ∈ [0, 2π)` where `|Q(e^{iω})|` peaks at one.
///
/// Every grid local maximum is polished by a safeguarded Newton iteration on
/// `d|Q|²/dω` — between grid points the modulus can dip further below one
/// than the acceptance threshold, so thresholding raw grid values would drop
/// genuine peaks. Polished maxima above `1 − ε` are kept, then
/// near-duplicates are merged keeping the largest modulus.
pub fn localize(
    poly: &SparsePolynomial,
    n_star: usize,
    opts: &LocalizeOptions,
) -> Result<Vec<f64>, RecoverError> {
    let curve = certificate_curve(poly, n_star, opts.oversampling);
    let points = curve.len();
    let max_mod = curve.iter().map(|&(_, m)| m).fold(0.0, f64::max);
    let min_mod = curve.iter().map(|&(_, m)| m).fold(f64::INFINITY, f64::min);
    if max_mod > 1.0 + 1e-6 {
        return Err(RecoverError::CertificateOutOfBounds { max: max_mod });
    }
    if min_mod >= 1.0 - opts.peak_threshold {
        return Err(RecoverError::DegenerateCertificate);
    }

    let mut refined: Vec<(f64, f64)> = Vec::new();
    for t in 0..points {
        let prev = curve[(t + points - 1) % points].1;
        let here = curve[t].1;
        let next = curve[(t + 1) % points].1;
        if here >= prev && here > next {
            let spacing = TAU / points as f64;
            let center = curve[t].0;
            let omega = polish_peak(poly, center, spacing, opts.polish_tolerance);
            let (value, _, _) = poly.modulus_squared_jet(omega);
            refined.push((omega.rem_euclid(TAU), value));
        }
    }
    let accept = (1.0 - opts.peak_threshold) * (1.0 - opts.peak_threshold);
    refined.retain(|&(_, value)| value >= accept);
    if refined.is_empty() {
        return Err(RecoverError::NoCertificate);
    }

    // Merge peaks closer than the merge radius (cyclically), keeping the one
    // with the larger modulus.
    refined.sort_by(|a, b| a.0.total_cmp(&b.0));
    let radius = TAU / (opts.merge_divisor * n_star as f64);
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (omega, value) in refined {
        match merged.last_mut() {
            Some((last_omega, last_value)) if omega - *last_omega < radius => {
                if value > *last_value {
                    *last_omega = omega;
                    *last_value = value;
                }
            }
            _ => merged.push((omega, value)),
        }
    }
    // Wrap-around pair.
    if merged.len() > 1 {
        let first = merged[0];
        let last = *merged.last().expect("nonempty");
        if first.0 + TAU - last.0 < radius {
            if last.1 > first.1 {
                merged[0] = (last.0, last.1);
            }
            merged.pop();
        }
    }
    // Final filter against the threshold after polishing.
    let kept: Vec<f64> = merged
        .into_iter()
        .filter(|&(_, v)| v.sqrt() >= 1.0 - opts.peak_threshold)
        .map(|(omega, _)| omega)
        .collect();
    if kept.is_empty() {
        return Err(RecoverError::NoCertificate);
    }
    Ok(kept)
}

/// Safeguarded Newton on `g(ω) = d|Q|²/dω` inside `center ± spacing`.
fn polish_peak(poly: &SparsePolynomial, center: f64, spacing: f64, tol: f64) -> f64 {
    let mut lo = center - spacing;
    let mut hi = center + spacing;
    let mut omega = center;
    for _ in 0..200 {
        let (_, d1, d2) = poly.modulus_squared_jet(omega);
        // Shrink the bracket: the derivative is positive left of the max.
        if d1 > 0.0 {
            lo = omega;
        } else {
            hi = omega;
        }
        let newton_ok = d2 < 0.0;
        let step = if newton_ok { -d1 / d2 } else { f64::NAN };
        let candidate = omega + step;
        let next = if newton_ok && candidate > lo && candidate < hi {
            candidate
        } else {
            0.5 * (lo + hi)
        };
        if (next - omega).abs() <= tol {
            return next;
        }
        omega = next;
    }
    omega
}

/// Least-squares amplitude refit of the observation model at the given
/// frequencies. Returns the amplitudes and the relative ℓ₂ misfit.
///
/// The complex system is solved through its real embedding so the
/// conditioning check sees the true singular values.
pub fn fit_amplitudes(
    frequencies: &[f64],
    grids: &[SamplingGrid],
    obs: &Observations,
) -> Result<(Vec<Complex64>, f64), RecoverError> {
    let s = frequencies.len();
    if s == 0 {
        let norm: f64 = (0..obs.num_grids())
            .flat_map(|j| obs.grid(j).iter())
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            .sqrt();
        return Ok((Vec::new(), if norm > 0.0 { 1.0 } else { 0.0 }));
    }
    let rows: usize = grids.iter().map(|g| g.count).sum();
    let mut design = DMatrix::<f64>::zeros(2 * rows, 2 * s);
    let mut rhs = nalgebra::DVector::<f64>::zeros(2 * rows);
    let mut r = 0;
    for (j, grid) in grids.iter().enumerate() {
        for k in 0..grid.count {
            let t = grid.instant(k).to_f64();
            for (l, &xi) in frequencies.iter().enumerate() {
                let e = unit_phasor(xi * t);
                design[(2 * r, 2 * l)] = e.re;
                design[(2 * r, 2 * l + 1)] = -e.im;
                design[(2 * r + 1, 2 * l)] = e.im;
                design[(2 * r + 1, 2 * l + 1)] = e.re;
            }
            rhs[2 * r] = obs.grid(j)[k].re;
            rhs[2 * r + 1] = obs.grid(j)[k].im;
            r += 1;
        }
    }
    let svd = design.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let sigma_min = svd
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let condition = if sigma_min > 0.0 {
        sigma_max / sigma_min
    } else {
        f64::INFINITY
    };
    if condition > 1e12 {
        return Err(RecoverError::IllConditioned { condition });
    }
    let coeffs = svd
        .solve(&rhs, 0.0)
        .map_err(|e| RecoverError::Solver(SolverError::NumericalBreakdown(e.to_string())))?;
    let amplitudes: Vec<Complex64> = (0..s)
        .map(|l| Complex64::new(coeffs[2 * l], coeffs[2 * l + 1]))
        .collect();
    let misfit = (&design * &coeffs - &rhs).norm();
    let scale = rhs.norm();
    let residual = if scale > 0.0 { misfit / scale } else { 0.0 };
    Ok((amplitudes, residual))
}

/// Wrap-around minimal separation of the normalized frequencies `ξ/f_*`
/// against the uniform-case threshold `4/(n_* − 1)`.
pub fn check_separation(frequencies: &[f64], rate_star: f64, n_star: usize) -> SeparationReport {
    let threshold = if n_star > 1 {
        4.0 / (n_star as f64 - 1.0)
    } else {
        f64::INFINITY
    };
    if frequencies.len() < 2 {
        return SeparationReport {
            satisfied: true,
            margin: f64::INFINITY,
            min_separation: f64::INFINITY,
            threshold,
        };
    }
    let mut nus: Vec<f64> = frequencies
        .iter()
        .map(|&xi| (xi / rate_star).rem_euclid(1.0))
        .collect();
    nus.sort_by(f64::total_cmp);
    let mut min_sep = f64::INFINITY;
    for i in 0..nus.len() {
        let next = if i + 1 < nus.len() {
            nus[i + 1] - nus[i]
        } else {
            nus[0] + 1.0 - nus[i]
        };
        min_sep = min_sep.min(next);
    }
    SeparationReport {
        // Boundary-inclusive up to representation error of the inputs.
        satisfied: min_sep >= threshold - 1e-12,
        margin: min_sep - threshold,
        min_separation: min_sep,
        threshold,
    }
}

/// Everything the pipeline produces: the estimate plus the certificate,
/// alignment data, and solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryOutcome {
    pub estimate: Estimate,
    pub common: CommonGrid,
    pub support: SupportSet,
    pub polynomial: SparsePolynomial,
    pub dual_vector: Vec<Complex64>,
    pub objective: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub residuals: Residuals,
    pub separation: SeparationReport,
}

/// Runs the whole estimator: align, merge, solve the reduced program,
/// localize the certificate peaks, refit amplitudes.
pub fn run_pipeline(
    grids: &[SamplingGrid],
    obs: &Observations,
    solver_config: &SolverConfig,
    localize_opts: &LocalizeOptions,
) -> Result<RecoveryOutcome, RecoverError> {
    let common = find_common_grid(grids)?;
    let support = support_set(grids, &common);
    let merged = merge_collisions(obs, &support)?;
    let problem = build_reduced(&merged, &support, common.count_star)?;
    let solution = solve(&problem, solver_config)?;
    if solution.status != SolveStatus::Optimal {
        return Err(RecoverError::SolverNotOptimal {
            status: solution.status,
            residual: solution.residuals.max(),
        });
    }
    let c_star = solution.dual_vector(&problem);
    let poly = dual_polynomial(&c_star, &support);

    let rate_star = common.rate_star.to_f64();
    let n_star = common.count_star;
    let data_norm = merged.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();

    let peaks = match localize(&poly, n_star, localize_opts) {
        Ok(peaks) => peaks,
        // A vanishing observation has a vanishing certificate and an empty
        // recovery; anything else failing to certify is a real error.
        Err(RecoverError::NoCertificate) if data_norm <= 1e-9 => Vec::new(),
        Err(e) => return Err(e),
    };

    // Peak at ω corresponds to normalized frequency frac(−ω/2π).
    let mut frequencies: Vec<f64> = peaks
        .iter()
        .map(|&omega| (-omega / TAU).rem_euclid(1.0) * rate_star)
        .collect();
    frequencies.sort_by(f64::total_cmp);
    frequencies.dedup();

    let (amplitudes, residual) = fit_amplitudes(&frequencies, grids, obs)?;

    // Margin: distance of the certificate below one away from accepted peaks.
    let curve = certificate_curve(&poly, n_star, localize_opts.oversampling);
    let guard = std::f64::consts::PI / n_star as f64;
    let away_max = curve
        .iter()
        .filter(|&&(omega, _)| {
            peaks.iter().all(|&p| {
                let d = (omega - p).rem_euclid(TAU);
                d.min(TAU - d) > guard
            })
        })
        .map(|&(_, m)| m)
        .fold(0.0, f64::max);
    let certificate_margin = 1.0 - away_max;

    let separation = check_separation(&frequencies, rate_star, n_star);
    Ok(RecoveryOutcome {
        estimate: Estimate {
            frequencies,
            amplitudes,
            certificate_margin,
            residual,
        },
        common,
        support,
        polynomial: poly,
        dual_vector: c_star,
        objective: solution.objective_value,
        status: solution.status,
        iterations: solution.iterations,
        residuals: solution.residuals,
        separation,
    })
}
