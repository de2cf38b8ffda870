//! Projection-splitting solver for the assembled conic problems.
//!
//! The iteration is consensus ADMM on
//! `minimize ⟨c̃, x⟩ + ½ xᵀD x  s.t.  x ∈ {Ax = b},  x ∈ K`,
//! alternating the x-update (an exact weighted projection onto the affine
//! set, through a Cholesky factorization of `A Λ⁻¹ Aᵀ` refreshed only when
//! the penalty changes) with a projection onto the PSD cone of each block
//! (eigendecomposition of the real embedding, negative eigenvalues clipped),
//! with over-relaxation and window-based penalty rebalancing. The returned
//! iterate is the cone-feasible one, so an `Optimal` solution is PSD to
//! eigensolver accuracy and satisfies the equalities to the primal tolerance.
//!
//! The diagonal quadratic term backs [`solve_ridged`]: the certificate
//! programs have a whole face of dual optima, and a small ridge on the dual
//! vector selects a canonical point of it that depends only on the feasible
//! set of the dual coefficients, which the full and reduced programs share.
//!
//! Everything is deterministic: fixed iteration order, no randomization, and
//! penalty updates driven only by computed residuals.

use crate::sdp::{
    block_from_svec, ConicProblem, ConicSolution, LinearEquality, Residuals, SolveStatus,
};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use thiserror::Error;

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
}

/// Equilibration applied to the equality rows before iterating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scaling {
    None,
    #[default]
    Ruiz,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub eps_primal: f64,
    pub eps_dual: f64,
    pub eps_gap: f64,
    pub max_iters: usize,
    /// Over-relaxation factor in (0, 2).
    pub over_relaxation: f64,
    pub scaling: Scaling,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eps_primal: 1e-8,
            eps_dual: 1e-8,
            eps_gap: 1e-8,
            max_iters: 50_000,
            over_relaxation: 1.5,
            scaling: Scaling::Ruiz,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<(), SolverError> {
        if !(self.eps_primal > 0.0 && self.eps_dual > 0.0 && self.eps_gap > 0.0) {
            return Err(SolverError::NumericalBreakdown(
                "tolerances must be positive".into(),
            ));
        }
        if self.max_iters < 1 {
            return Err(SolverError::NumericalBreakdown(
                "max_iters must be at least one".into(),
            ));
        }
        if !(self.over_relaxation > 0.0 && self.over_relaxation < 2.0) {
            return Err(SolverError::NumericalBreakdown(
                "over-relaxation must lie in (0, 2)".into(),
            ));
        }
        Ok(())
    }
}

/// Nearest (Frobenius) positive semidefinite matrix: symmetrize, decompose,
/// clip negative eigenvalues to zero.
pub fn psd_project(m: &DMatrix<f64>) -> Result<DMatrix<f64>, SolverError> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(SolverError::NumericalBreakdown(
            "non-finite entry in projection input".into(),
        ));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 100_000).ok_or_else(|| {
        SolverError::NumericalBreakdown("symmetric eigendecomposition failed".into())
    })?;
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose())
}

fn project_cone(problem: &ConicProblem, x: &mut [f64]) -> Result<(), SolverError> {
    for block in &problem.psd_blocks {
        let d = block.complex_dim;
        let span = &x[block.offset..block.offset + d * d];
        let hermitian = block_from_svec(span, d);
        let projected = psd_project(&hermitian.real_embedding())?;
        write_block_svec(&projected, d, &mut x[block.offset..block.offset + d * d]);
    }
    Ok(())
}

/// Reads the PSD-projected real embedding back into svec coordinates,
/// averaging the redundant copies so the result is exactly Hermitian.
fn write_block_svec(w: &DMatrix<f64>, d: usize, out: &mut [f64]) {
    let layout = crate::sdp::VariableLayout {
        block_dim: d,
        corner_rows: Vec::new(),
    };
    for col in 0..d {
        out[layout.diag(col)] = 0.5 * (w[(col, col)] + w[(d + col, d + col)]);
        for row in col + 1..d {
            let re = 0.25
                * (w[(row, col)] + w[(col, row)] + w[(d + row, d + col)] + w[(d + col, d + row)]);
            let im = 0.25
                * (w[(d + row, col)] - w[(row, d + col)] - w[(d + col, row)] + w[(col, d + row)]);
            out[layout.re(row, col)] = SQRT2 * re;
            out[layout.im(row, col)] = SQRT2 * im;
        }
    }
}

/// Outcome of re-verifying a solution outside the iteration loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificateCheck {
    /// Smallest eigenvalue over the solution's Hermitian blocks.
    pub min_eigenvalue: f64,
    /// Euclidean norm of the equality residual.
    pub equality_residual: f64,
}

/// Recomputes cone and equality feasibility of a solution from scratch.
pub fn verify_certificate(problem: &ConicProblem, solution: &ConicSolution) -> CertificateCheck {
    let mut min_eig = f64::INFINITY;
    for block in &problem.psd_blocks {
        let d = block.complex_dim;
        let span = &solution.variables[block.offset..block.offset + d * d];
        min_eig = min_eig.min(block_from_svec(span, d).min_eigenvalue());
    }
    let mut sq = 0.0;
    for eq in &problem.equalities {
        let lhs: f64 = eq
            .terms
            .iter()
            .map(|&(v, c)| c * solution.variables[v])
            .sum();
        sq += (lhs - eq.rhs) * (lhs - eq.rhs);
    }
    CertificateCheck {
        min_eigenvalue: min_eig,
        equality_residual: sq.sqrt(),
    }
}

/// Internal problem form: the public conic problem plus an optional diagonal
/// quadratic term and equality overrides.
struct IterationData<'a> {
    problem: &'a ConicProblem,
    equalities: Vec<LinearEquality>,
    /// Linear term of the minimized objective.
    minimize: Vec<f64>,
    /// Diagonal of the quadratic term (zero when absent).
    quad_diag: Vec<f64>,
}

struct ScaledRows {
    rows: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    row_scale: Vec<f64>,
}

fn scale_rows(equalities: &[LinearEquality], scaling: Scaling) -> ScaledRows {
    let m = equalities.len();
    let mut row_scale = vec![1.0; m];
    if scaling == Scaling::Ruiz {
        // With only the rows free to scale, the equilibration fixed point is
        // reached in one pass: unit infinity norm per row.
        for (i, eq) in equalities.iter().enumerate() {
            let inf: f64 = eq.terms.iter().map(|&(_, c)| c.abs()).fold(0.0, f64::max);
            if inf > 0.0 {
                row_scale[i] = 1.0 / inf;
            }
        }
    }
    ScaledRows {
        rows: equalities
            .iter()
            .zip(&row_scale)
            .map(|(eq, &s)| eq.terms.iter().map(|&(v, c)| (v, c * s)).collect())
            .collect(),
        rhs: equalities
            .iter()
            .zip(&row_scale)
            .map(|(eq, &s)| eq.rhs * s)
            .collect(),
        row_scale,
    }
}

/// Factorization of `A Λ⁻¹ Aᵀ` for the current penalty, with
/// `Λ = diag(quad) + ρI`.
struct XUpdate {
    lambda_inv: Vec<f64>,
    chol: Option<Cholesky<f64, Dyn>>,
}

impl XUpdate {
    fn new(scaled: &ScaledRows, quad_diag: &[f64], rho: f64) -> Result<Self, SolverError> {
        let lambda_inv: Vec<f64> = quad_diag.iter().map(|&d| 1.0 / (d + rho)).collect();
        let m = scaled.rows.len();
        let chol = if m == 0 {
            None
        } else {
            let mut gram = DMatrix::zeros(m, m);
            for i in 0..m {
                for j in i..m {
                    let mut dot = 0.0;
                    // Rows are short; a merge join would not pay off here.
                    for &(vi, ci) in &scaled.rows[i] {
                        for &(vj, cj) in &scaled.rows[j] {
                            if vi == vj {
                                dot += ci * cj * lambda_inv[vi];
                            }
                        }
                    }
                    gram[(i, j)] = dot;
                    gram[(j, i)] = dot;
                }
            }
            Some(Cholesky::new(gram).ok_or_else(|| {
                SolverError::NumericalBreakdown(
                    "equality system is rank-deficient; cannot factor A·Λ⁻¹·Aᵀ".into(),
                )
            })?)
        };
        Ok(XUpdate { lambda_inv, chol })
    }

    /// Minimizes `⟨c̃,x⟩ + ½xᵀDx + (ρ/2)‖x − v‖²` over `{Ax = b}`.
    /// Returns the minimizer and the equality multiplier λ (scaled rows).
    fn solve(
        &self,
        scaled: &ScaledRows,
        minimize: &[f64],
        rho: f64,
        v: &[f64],
    ) -> (Vec<f64>, DVector<f64>) {
        let n = v.len();
        let mut t = vec![0.0; n];
        for i in 0..n {
            t[i] = self.lambda_inv[i] * (rho * v[i] - minimize[i]);
        }
        let Some(chol) = &self.chol else {
            return (t, DVector::zeros(0));
        };
        let m = scaled.rows.len();
        let rhs = DVector::from_iterator(
            m,
            scaled.rows.iter().zip(&scaled.rhs).map(|(row, &b)| {
                row.iter().map(|&(var, c)| c * t[var]).sum::<f64>() - b
            }),
        );
        let lambda = chol.solve(&rhs);
        let mut x = t;
        for (row, &l) in scaled.rows.iter().zip(lambda.iter()) {
            for &(var, c) in row {
                x[var] -= self.lambda_inv[var] * c * l;
            }
        }
        (x, lambda)
    }
}

fn residuals_at(
    data: &IterationData,
    scaled: &ScaledRows,
    w: &[f64],
    u: &[f64],
    lambda: &DVector<f64>,
    rho: f64,
    b_norm: f64,
    c_norm: f64,
) -> Residuals {
    let n = w.len();
    // Primal: equality violation of the cone-feasible iterate, measured on
    // the original (unscaled) rows.
    let primal_sq: f64 = data
        .equalities
        .iter()
        .map(|eq| {
            let lhs: f64 = eq.terms.iter().map(|&(v, c)| c * w[v]).sum();
            (lhs - eq.rhs) * (lhs - eq.rhs)
        })
        .sum();
    let primal = primal_sq.sqrt() / (1.0 + b_norm);

    // Dual: ‖∇f(w) + Aᵀν − z‖ with z = −ρ·u; Aᵀν is identical through the
    // scaled rows and the scaled multiplier.
    let mut dual_vec: Vec<f64> = (0..n)
        .map(|i| data.minimize[i] + data.quad_diag[i] * w[i] + rho * u[i])
        .collect();
    for (row, &l) in scaled.rows.iter().zip(lambda.iter()) {
        for &(var, c) in row {
            dual_vec[var] += c * l;
        }
    }
    let dual = dual_vec.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + c_norm);

    // Gap between primal and dual objective estimates.
    let pobj: f64 = (0..n)
        .map(|i| data.minimize[i] * w[i] + 0.5 * data.quad_diag[i] * w[i] * w[i])
        .sum();
    let mut dobj = 0.0;
    for ((&row_scale, &l), eq) in scaled
        .row_scale
        .iter()
        .zip(lambda.iter())
        .zip(&data.equalities)
    {
        dobj -= eq.rhs * row_scale * l;
    }
    // Quadratic coordinates contribute −½ s²/D for s = z − c̃ − Aᵀν,
    // which simplifies to D·w − (dual residual vector).
    for i in 0..n {
        if data.quad_diag[i] > 0.0 {
            let s = data.quad_diag[i] * w[i] - dual_vec[i];
            dobj -= 0.5 * s * s / data.quad_diag[i];
        }
    }
    let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
    Residuals { primal, dual, gap }
}

/// Solves the problem; `Optimal` means every residual passed its tolerance.
pub fn solve(problem: &ConicProblem, config: &SolverConfig) -> Result<ConicSolution, SolverError> {
    let data = IterationData {
        problem,
        equalities: problem.equalities.clone(),
        minimize: negated_objective(problem),
        quad_diag: vec![0.0; problem.num_vars()],
    };
    solve_internal(&data, config, None, None).map(|(s, _)| s)
}

/// Like [`solve`], additionally recording the residuals of every iteration.
pub fn solve_traced(
    problem: &ConicProblem,
    config: &SolverConfig,
) -> Result<(ConicSolution, Vec<Residuals>), SolverError> {
    let data = IterationData {
        problem,
        equalities: problem.equalities.clone(),
        minimize: negated_objective(problem),
        quad_diag: vec![0.0; problem.num_vars()],
    };
    let mut trace = Vec::new();
    let (solution, _) = solve_internal(&data, config, Some(&mut trace), None)?;
    Ok((solution, trace))
}

/// Default ridge strength for [`solve_ridged`], balancing how sharply the
/// dual vector is pinned down (error `∝ residual/μ`) against the objective
/// degradation (`∝ μ²`).
pub const DEFAULT_DUAL_RIDGE: f64 = 1e-2;

/// Solves `maximize Re⟨y, c⟩ − (μ/2)‖c‖²` over the problem's constraints.
///
/// The plain program has a whole face of optimal dual vectors; the ridge
/// selects a unique one that depends only on the feasible set of the dual
/// coefficients — which the full and reduced programs share — so both
/// formulations return the same canonical certificate. By the envelope
/// theorem the attained `Re⟨y, c⟩` (the reported objective) falls short of
/// the true optimum only by `O(μ²)`.
pub fn solve_ridged(
    problem: &ConicProblem,
    config: &SolverConfig,
    mu: f64,
) -> Result<ConicSolution, SolverError> {
    let n = problem.num_vars();
    let mut quad_diag = vec![0.0; n];
    let corner = problem.layout.block_dim - 1;
    for &row in &problem.layout.corner_rows {
        quad_diag[problem.layout.re(corner, row)] = mu;
        quad_diag[problem.layout.im(corner, row)] = mu;
    }
    let data = IterationData {
        problem,
        equalities: problem.equalities.clone(),
        minimize: negated_objective(problem),
        quad_diag,
    };
    let (mut solution, _) = solve_internal(&data, config, None, None)?;
    solution.objective_value = objective_of(problem, &solution.variables);
    Ok(solution)
}

fn negated_objective(problem: &ConicProblem) -> Vec<f64> {
    let mut minimize = vec![0.0; problem.num_vars()];
    for &(v, c) in &problem.objective {
        minimize[v] -= c;
    }
    minimize
}

fn solve_internal(
    data: &IterationData,
    config: &SolverConfig,
    mut trace: Option<&mut Vec<Residuals>>,
    warm_start: Option<&[f64]>,
) -> Result<(ConicSolution, f64), SolverError> {
    config.validate()?;
    let problem = data.problem;
    let n = problem.num_vars();
    let scaled = scale_rows(&data.equalities, config.scaling);
    let b_norm = data
        .equalities
        .iter()
        .map(|eq| eq.rhs * eq.rhs)
        .sum::<f64>()
        .sqrt();
    let c_norm = data.minimize.iter().map(|v| v * v).sum::<f64>().sqrt();

    let alpha = config.over_relaxation;
    let mut rho = (0.1 + c_norm / (1.0 + b_norm)).clamp(1e-3, 1e3);
    let mut xupdate = XUpdate::new(&scaled, &data.quad_diag, rho)?;

    // Start from the PSD projection of the least-norm affine point, or the
    // supplied warm start.
    let mut w = match warm_start {
        Some(start) => start.to_vec(),
        None => {
            let (aff0, _) = xupdate.solve(&scaled, &vec![0.0; n], rho, &vec![0.0; n]);
            aff0
        }
    };
    project_cone(problem, &mut w)?;
    let mut u = vec![0.0; n];

    let mut best: Option<(f64, ConicSolution)> = None;
    let mut last_residuals = Residuals {
        primal: f64::INFINITY,
        dual: f64::INFINITY,
        gap: f64::INFINITY,
    };
    let mut status = SolveStatus::MaxIterations;
    let mut iterations = 0;

    // Consensus-gap history for stall detection on infeasible problems.
    let stall_window = 500;
    let mut previous_gap: Option<f64> = None;
    let mut plateau_count = 0usize;

    let mut v = vec![0.0; n];
    for iter in 1..=config.max_iters {
        iterations = iter;

        for i in 0..n {
            v[i] = w[i] - u[i];
        }
        let (x, lambda) = xupdate.solve(&scaled, &data.minimize, rho, &v);

        let mut w_new = vec![0.0; n];
        for i in 0..n {
            let x_relaxed = alpha * x[i] + (1.0 - alpha) * w[i];
            w_new[i] = x_relaxed + u[i];
        }
        project_cone(problem, &mut w_new)?;
        let mut consensus_sq = 0.0;
        for i in 0..n {
            let x_relaxed = alpha * x[i] + (1.0 - alpha) * w[i];
            let gap_term = x[i] - w_new[i];
            consensus_sq += gap_term * gap_term;
            u[i] = x_relaxed + u[i] - w_new[i];
        }

        if !consensus_sq.is_finite() {
            return Err(SolverError::NumericalBreakdown(format!(
                "non-finite iterate at iteration {iter}"
            )));
        }

        let residuals = residuals_at(data, &scaled, &w_new, &u, &lambda, rho, b_norm, c_norm);
        w = w_new;
        if let Some(t) = trace.as_deref_mut() {
            t.push(residuals);
        }
        last_residuals = residuals;

        let score = residuals.max();
        if best.as_ref().map_or(true, |(s, _)| score < *s) {
            best = Some((
                score,
                ConicSolution {
                    variables: w.clone(),
                    objective_value: objective_of(problem, &w),
                    status: SolveStatus::MaxIterations,
                    residuals,
                    iterations: iter,
                },
            ));
        }

        if residuals.primal <= config.eps_primal
            && residuals.dual <= config.eps_dual
            && residuals.gap <= config.eps_gap
        {
            status = SolveStatus::Optimal;
            break;
        }

        // Penalty rebalancing, frozen late so the fixed-point theory applies.
        if iter % 100 == 0 && iter <= 20_000 {
            let ratio = residuals.primal / residuals.dual.max(1e-300);
            let factor = ratio.sqrt().clamp(0.2, 5.0);
            if !(0.67..=1.5).contains(&factor) {
                rho = (rho * factor).clamp(1e-6, 1e6);
                for ui in u.iter_mut() {
                    *ui /= factor;
                }
                xupdate = XUpdate::new(&scaled, &data.quad_diag, rho)?;
            }
        }

        // An infeasible problem settles into an exactly constant nonzero
        // consensus gap; feasible problems merely pass through slow
        // transients, so declare infeasibility only after several
        // consecutive flat windows well past the burn-in.
        if iter % stall_window == 0 {
            let scale = 1.0 + w.iter().map(|v| v * v).sum::<f64>().sqrt();
            let gap_now = consensus_sq.sqrt() / scale;
            if let Some(gap_prev) = previous_gap {
                if gap_now > 1e-3 && (gap_now - gap_prev).abs() <= 1e-8 * gap_now {
                    plateau_count += 1;
                } else {
                    plateau_count = 0;
                }
                if plateau_count >= 3 && iter >= 5_000 {
                    status = SolveStatus::Infeasible;
                    break;
                }
            }
            previous_gap = Some(gap_now);
        }
    }

    let solution = match status {
        SolveStatus::Optimal | SolveStatus::Infeasible => ConicSolution {
            variables: w.clone(),
            objective_value: objective_of(problem, &w),
            status,
            residuals: last_residuals,
            iterations,
        },
        SolveStatus::MaxIterations => {
            let (_, mut best_solution) = best.expect("at least one iteration ran");
            best_solution.status = SolveStatus::MaxIterations;
            best_solution
        }
    };
    Ok((solution, rho))
}

fn objective_of(problem: &ConicProblem, x: &[f64]) -> f64 {
    problem.objective.iter().map(|&(v, c)| c * x[v]).sum()
}
