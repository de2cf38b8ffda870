//! Assembly of the certificate programs as real conic problems.
//!
//! Both the full program (Hermitian block of dimension `n_* + 1`) and the
//! reduced program (dimension `N_* + 1`) share one shape:
//!
//! ```text
//!   maximize   Re⟨y, c⟩
//!   subject to B = [[M, v], [vᴴ, 1]] ⪰ 0,
//!              toeplitz-adjoint equalities on M  = e_1,
//! ```
//!
//! where `v` carries the dual vector `c` (on all rows for the reduced form,
//! on the support rows for the full form, zero elsewhere). The variables are
//! the scaled lower-triangle coordinates (svec) of `B`: the diagonal, then
//! `√2·Re` and `√2·Im` of each strictly-lower entry, column-major. The corner
//! `B[d−1, d−1] = 1` and the off-support zeros are pinned by equalities, so
//! the PSD constraint is exactly "the variable vector, read as a Hermitian
//! matrix, is PSD" — which a projection method can enforce directly.

use crate::commongrid::SupportSet;
use crate::gram::{bounded_real_constraints, GramError, HermitianMatrix};
use crate::model::SpikeSignal;
use num_complex::Complex64;
use std::fmt::Write as _;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// svec coordinate layout of one Hermitian block plus the bookkeeping needed
/// to read the dual vector back out of a solution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableLayout {
    /// Complex dimension of the block, corner row included.
    pub block_dim: usize,
    /// Rows of the corner column that carry the dual vector `c`, in order.
    pub corner_rows: Vec<usize>,
}

impl VariableLayout {
    pub fn num_vars(&self) -> usize {
        self.block_dim * self.block_dim
    }

    /// Coordinate of the diagonal entry `B[i, i]`.
    pub fn diag(&self, i: usize) -> usize {
        debug_assert!(i < self.block_dim);
        i
    }

    fn strict_lower_base(&self, row: usize, col: usize) -> usize {
        debug_assert!(row > col && row < self.block_dim);
        let d = self.block_dim;
        // Strictly-lower entries before column `col`, column-major.
        let before = col * (d - 1) - col * col.saturating_sub(1) / 2;
        d + 2 * (before + row - col - 1)
    }

    /// Coordinate of `√2·Re B[row, col]` for `row > col`.
    pub fn re(&self, row: usize, col: usize) -> usize {
        self.strict_lower_base(row, col)
    }

    /// Coordinate of `√2·Im B[row, col]` for `row > col`.
    pub fn im(&self, row: usize, col: usize) -> usize {
        self.strict_lower_base(row, col) + 1
    }

    /// Length of the dual vector `c`.
    pub fn dual_len(&self) -> usize {
        self.corner_rows.len()
    }
}

/// One real equality `Σ coef·x[var] = rhs` with sparse terms.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEquality {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// A PSD block: a span of the variable vector interpreted as the svec of a
/// Hermitian matrix of the given complex dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PsdBlock {
    pub complex_dim: usize,
    pub offset: usize,
}

/// Solver-agnostic conic problem: maximize a linear functional subject to
/// sparse equalities and PSD blocks over the variable vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicProblem {
    /// Sparse maximization objective.
    pub objective: Vec<(usize, f64)>,
    pub equalities: Vec<LinearEquality>,
    pub psd_blocks: Vec<PsdBlock>,
    pub layout: VariableLayout,
}

impl ConicProblem {
    pub fn num_vars(&self) -> usize {
        self.layout.num_vars()
    }

    /// Plain-text sparse export for cross-checking with external solvers.
    ///
    /// Line format (one record per line, 0-based indices):
    /// `vars <n>` / `block <dim>` / `obj <var> <coef>` /
    /// `eq <id> <var> <coef>` / `rhs <id> <value>`.
    /// Variables are the svec coordinates described in the module docs.
    pub fn export_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "vars {}", self.num_vars());
        for b in &self.psd_blocks {
            let _ = writeln!(out, "block {}", b.complex_dim);
        }
        for (v, c) in &self.objective {
            let _ = writeln!(out, "obj {v} {c:.17e}");
        }
        for (i, eq) in self.equalities.iter().enumerate() {
            for (v, c) in &eq.terms {
                let _ = writeln!(out, "eq {i} {v} {c:.17e}");
            }
            let _ = writeln!(out, "rhs {i} {:.17e}", eq.rhs);
        }
        out
    }
}

/// Termination status of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIterations,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolveStatus::Optimal => write!(f, "Optimal"),
            SolveStatus::Infeasible => write!(f, "Infeasible"),
            SolveStatus::MaxIterations => write!(f, "MaxIterations"),
        }
    }
}

/// Relative KKT residuals of an iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.gap)
    }
}

/// Solution of a conic problem: the cone-feasible iterate in svec
/// coordinates, the attained objective, and the final residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicSolution {
    pub variables: Vec<f64>,
    pub objective_value: f64,
    pub status: SolveStatus,
    pub residuals: Residuals,
    pub iterations: usize,
}

impl ConicSolution {
    /// Reads the Hermitian block back out of the svec coordinates.
    pub fn block_matrix(&self, problem: &ConicProblem) -> HermitianMatrix {
        block_from_svec(&self.variables, problem.layout.block_dim)
    }

    /// Extracts the dual vector `c` from the corner column.
    pub fn dual_vector(&self, problem: &ConicProblem) -> Vec<Complex64> {
        let layout = &problem.layout;
        let corner = layout.block_dim - 1;
        layout
            .corner_rows
            .iter()
            .map(|&row| {
                // c_t = B[row, corner] = conj(B[corner, row]).
                let re = self.variables[layout.re(corner, row)] / SQRT2;
                let im = -self.variables[layout.im(corner, row)] / SQRT2;
                Complex64::new(re, im)
            })
            .collect()
    }
}

/// Reads svec coordinates back into a Hermitian matrix.
pub fn block_from_svec(x: &[f64], dim: usize) -> HermitianMatrix {
    let layout = VariableLayout {
        block_dim: dim,
        corner_rows: Vec::new(),
    };
    let mut lower = Vec::with_capacity(dim * (dim + 1) / 2);
    for col in 0..dim {
        lower.push(Complex64::new(x[layout.diag(col)], 0.0));
        for row in col + 1..dim {
            lower.push(Complex64::new(
                x[layout.re(row, col)] / SQRT2,
                x[layout.im(row, col)] / SQRT2,
            ));
        }
    }
    HermitianMatrix::from_lower(dim, lower).expect("packed length is consistent")
}

/// Writes a Hermitian matrix into svec coordinates (diagonal, then
/// `√2`-scaled real/imaginary pairs of the strict lower triangle).
pub fn svec_from_block(h: &HermitianMatrix) -> Vec<f64> {
    let dim = h.dim();
    let layout = VariableLayout {
        block_dim: dim,
        corner_rows: Vec::new(),
    };
    let mut x = vec![0.0; dim * dim];
    for col in 0..dim {
        x[layout.diag(col)] = h.get(col, col).re;
        for row in col + 1..dim {
            let v = h.get(row, col);
            x[layout.re(row, col)] = SQRT2 * v.re;
            x[layout.im(row, col)] = SQRT2 * v.im;
        }
    }
    x
}

fn corner_equality(layout: &VariableLayout) -> LinearEquality {
    LinearEquality {
        terms: vec![(layout.diag(layout.block_dim - 1), 1.0)],
        rhs: 1.0,
    }
}

/// Objective terms for `maximize Re⟨y, c⟩` with `c` on the corner column.
fn dual_objective(layout: &VariableLayout, y: &[Complex64]) -> Vec<(usize, f64)> {
    let corner = layout.block_dim - 1;
    let mut terms = Vec::with_capacity(2 * y.len());
    for (t, &row) in layout.corner_rows.iter().enumerate() {
        // Re⟨y, c⟩ = Σ Re(y_t)·Re(c_t) + Im(y_t)·Im(c_t) with
        // Re c_t = x_re/√2 and Im c_t = −x_im/√2.
        if y[t].re != 0.0 {
            terms.push((layout.re(corner, row), y[t].re / SQRT2));
        }
        if y[t].im != 0.0 {
            terms.push((layout.im(corner, row), -y[t].im / SQRT2));
        }
    }
    terms
}

/// Real equality rows for the difference constraints on the leading block.
/// The imaginary part of the zero-difference constraint is identically zero
/// for a Hermitian block and is not emitted.
fn difference_rows(
    layout: &VariableLayout,
    constraints: &crate::gram::BoundedRealConstraints,
) -> Vec<LinearEquality> {
    let mut rows = Vec::new();
    for eq in &constraints.equalities {
        if eq.difference == 0 {
            let terms = eq
                .pairs
                .iter()
                .map(|&(p, _)| (layout.diag(p), 1.0))
                .collect();
            rows.push(LinearEquality {
                terms,
                rhs: eq.rhs.re,
            });
        } else {
            let re_terms = eq
                .pairs
                .iter()
                .map(|&(p, q)| (layout.re(p, q), 1.0 / SQRT2))
                .collect();
            let im_terms = eq
                .pairs
                .iter()
                .map(|&(p, q)| (layout.im(p, q), 1.0 / SQRT2))
                .collect();
            rows.push(LinearEquality {
                terms: re_terms,
                rhs: eq.rhs.re,
            });
            rows.push(LinearEquality {
                terms: im_terms,
                rhs: eq.rhs.im,
            });
        }
    }
    rows
}

/// Builds the reduced program: block `[[S, c], [cᴴ, 1]]` of complex dimension
/// `N_* + 1` with the compact Toeplitz-adjoint equalities on `S`.
pub fn build_reduced(
    y_merged: &[Complex64],
    sup: &SupportSet,
    n_star: usize,
) -> Result<ConicProblem, GramError> {
    if y_merged.len() != sup.len() {
        return Err(GramError::DimensionMismatch {
            expected: sup.len(),
            got: y_merged.len(),
        });
    }
    let constraints = bounded_real_constraints(&sup.indices, n_star)?;
    let n = sup.len();
    let layout = VariableLayout {
        block_dim: n + 1,
        corner_rows: (0..n).collect(),
    };
    let mut equalities = difference_rows(&layout, &constraints);
    equalities.push(corner_equality(&layout));
    Ok(ConicProblem {
        objective: dual_objective(&layout, y_merged),
        equalities,
        psd_blocks: vec![PsdBlock {
            complex_dim: n + 1,
            offset: 0,
        }],
        layout,
    })
}

/// Builds the full program: block `[[H, q], [qᴴ, 1]]` of complex dimension
/// `n_* + 1`, with `q` zero off the support and the plain Toeplitz-adjoint
/// equalities on `H`. Retained as a cross-validation oracle for the reduced
/// form; the dimension grows with the virtual grid, not the data.
pub fn build_full(
    y_merged: &[Complex64],
    sup: &SupportSet,
    n_star: usize,
) -> Result<ConicProblem, GramError> {
    if y_merged.len() != sup.len() {
        return Err(GramError::DimensionMismatch {
            expected: sup.len(),
            got: y_merged.len(),
        });
    }
    let identity: Vec<usize> = (0..n_star).collect();
    let constraints = bounded_real_constraints(&identity, n_star)?;
    if sup.indices.first() != Some(&0) {
        return Err(GramError::UnsupportedSupport(
            "support must contain index 0".into(),
        ));
    }
    let layout = VariableLayout {
        block_dim: n_star + 1,
        corner_rows: sup.indices.clone(),
    };
    let mut equalities = difference_rows(&layout, &constraints);
    equalities.push(corner_equality(&layout));
    // Off-support corner entries are structurally zero.
    let corner = layout.block_dim - 1;
    let mut on_support = vec![false; n_star];
    for &i in &sup.indices {
        on_support[i] = true;
    }
    for (row, _) in on_support.iter().enumerate().filter(|(_, &s)| !s) {
        equalities.push(LinearEquality {
            terms: vec![(layout.re(corner, row), 1.0)],
            rhs: 0.0,
        });
        equalities.push(LinearEquality {
            terms: vec![(layout.im(corner, row), 1.0)],
            rhs: 0.0,
        });
    }
    Ok(ConicProblem {
        objective: dual_objective(&layout, y_merged),
        equalities,
        psd_blocks: vec![PsdBlock {
            complex_dim: n_star + 1,
            offset: 0,
        }],
        layout,
    })
}

/// Feasibility probe for a fixed `ℐ`-supported coefficient vector `u`: the
/// block `[[S, u], [uᴴ, 1]]` with `u` pinned by equalities and a zero
/// objective. Feasible exactly when `|Q| ≤ 1` on the unit circle.
pub fn build_feasibility(
    u: &[Complex64],
    support: &[usize],
    n_star: usize,
) -> Result<ConicProblem, GramError> {
    if u.len() != support.len() {
        return Err(GramError::DimensionMismatch {
            expected: support.len(),
            got: u.len(),
        });
    }
    let constraints = bounded_real_constraints(support, n_star)?;
    let n = support.len();
    let layout = VariableLayout {
        block_dim: n + 1,
        corner_rows: (0..n).collect(),
    };
    let mut equalities = difference_rows(&layout, &constraints);
    equalities.push(corner_equality(&layout));
    let corner = layout.block_dim - 1;
    for (t, &row) in layout.corner_rows.clone().iter().enumerate() {
        equalities.push(LinearEquality {
            terms: vec![(layout.re(corner, row), 1.0)],
            rhs: SQRT2 * u[t].re,
        });
        equalities.push(LinearEquality {
            terms: vec![(layout.im(corner, row), 1.0)],
            rhs: -SQRT2 * u[t].im,
        });
    }
    Ok(ConicProblem {
        objective: Vec::new(),
        equalities,
        psd_blocks: vec![PsdBlock {
            complex_dim: n + 1,
            offset: 0,
        }],
        layout,
    })
}

/// Gap between the dual optimum and the atomic total-variation norm of the
/// recovered signal; strong duality makes this vanish on exact recoveries.
pub fn dual_objective_check(solution: &ConicSolution, recovered: &SpikeSignal) -> f64 {
    (recovered.tv_norm() - solution.objective_value).abs()
}

/// Lifts a reduced-program solution into full-program coordinates:
/// `H = C_ℐ S C_ℐᴴ` and corner column `q = C_ℐ c`. By the sparse
/// bounded-modulus equivalence the lifted point is feasible for the full
/// program and attains the same objective, so it can seed (and is confirmed
/// by) a full-program solve.
pub fn lift_reduced_solution(
    reduced: &ConicProblem,
    solution: &ConicSolution,
    full: &ConicProblem,
) -> Vec<f64> {
    let support = &full.layout.corner_rows;
    let n_reduced = reduced.layout.dual_len();
    assert_eq!(support.len(), n_reduced, "support sizes disagree");
    let small = solution.block_matrix(reduced);
    let c = solution.dual_vector(reduced);
    let d = full.layout.block_dim;
    let layout = &full.layout;
    let mut x = vec![0.0; layout.num_vars()];
    for (p, &i) in support.iter().enumerate() {
        for (q, &ip) in support.iter().enumerate().take(p + 1) {
            let v = small.get(p, q);
            if i == ip {
                x[layout.diag(i)] = v.re;
            } else {
                x[layout.re(i, ip)] = SQRT2 * v.re;
                x[layout.im(i, ip)] = SQRT2 * v.im;
            }
        }
    }
    let corner = d - 1;
    for (p, &i) in support.iter().enumerate() {
        // B[corner, i] = conj(c_p).
        x[layout.re(corner, i)] = SQRT2 * c[p].re;
        x[layout.im(corner, i)] = -SQRT2 * c[p].im;
    }
    x[layout.diag(corner)] = 1.0;
    x
}
