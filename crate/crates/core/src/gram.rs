//! Gram parametrization of trigonometric polynomials and bounded-modulus
//! constraint generation for sparse supports.
//!
//! Conventions, fixed once here and relied on everywhere else:
//!
//! * `toeplitz_adjoint(H)[k]` sums the k-th lower diagonal of `H`
//!   (entries with row = col + k), so for a rank-one `H = q qᴴ` it returns
//!   the autocorrelation `Σ_i q[i+k]·conj(q[i])`.
//! * A [`TrigPolynomial`] with coefficients `r` takes the value
//!   `r[0] + Σ_{k≥1} (r[k] e^{-ikω} + conj(r[k]) e^{ikω})` at angle `ω`.
//!   With `r = toeplitz_adjoint(G)` this equals `ψ(e^{iω})ᴴ G ψ(e^{iω})`
//!   where `ψ(z) = (1, z, …, z^n)ᵀ`, i.e. `G` is a Gram matrix of the
//!   polynomial.
//! * Consequently the polynomial induced by `q qᴴ` evaluates to
//!   `|Q(e^{-iω})|²` for `Q(z) = Σ q_k z^k`.
//!
//! For a polynomial supported on `ℐ`, a Gram representation compressed
//! through the selection map exists exactly when the representation's
//! monomial support lies in `ℐ − ℐ`; the generated equality constraints
//! therefore range over realized differences only.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::collections::BTreeMap;
use thiserror::Error;

const HERMITIAN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GramError {
    #[error("matrix is not Hermitian (max asymmetry {max_asymmetry:.3e})")]
    NotHermitian { max_asymmetry: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unsupported polynomial support: {0}")]
    UnsupportedSupport(String),
}

/// Hermitian matrix stored as a packed lower triangle (column-major).
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    lower: Vec<Complex64>,
}

impl HermitianMatrix {
    /// Checks Hermitian symmetry within `1e-12` and stores the lower triangle.
    pub fn from_dense(m: &DMatrix<Complex64>) -> Result<Self, GramError> {
        if m.nrows() != m.ncols() {
            return Err(GramError::DimensionMismatch {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        let dim = m.nrows();
        let mut max_asym = 0.0f64;
        for i in 0..dim {
            max_asym = max_asym.max(m[(i, i)].im.abs());
            for j in 0..i {
                max_asym = max_asym.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if max_asym > HERMITIAN_TOLERANCE {
            return Err(GramError::NotHermitian {
                max_asymmetry: max_asym,
            });
        }
        let mut lower = Vec::with_capacity(dim * (dim + 1) / 2);
        for col in 0..dim {
            lower.push(Complex64::new(m[(col, col)].re, 0.0));
            for row in col + 1..dim {
                lower.push(m[(row, col)]);
            }
        }
        Ok(HermitianMatrix { dim, lower })
    }

    /// Builds directly from a packed lower triangle (diagonal first per
    /// column); diagonal imaginary parts are dropped.
    pub fn from_lower(dim: usize, mut lower: Vec<Complex64>) -> Result<Self, GramError> {
        if lower.len() != dim * (dim + 1) / 2 {
            return Err(GramError::DimensionMismatch {
                expected: dim * (dim + 1) / 2,
                got: lower.len(),
            });
        }
        let mut offset = 0;
        for col in 0..dim {
            lower[offset].im = 0.0;
            offset += dim - col;
        }
        Ok(HermitianMatrix { dim, lower })
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        let mut lower = vec![Complex64::new(0.0, 0.0); dim * (dim + 1) / 2];
        let mut offset = 0;
        for col in 0..dim {
            lower[offset] = Complex64::new(scale, 0.0);
            offset += dim - col;
        }
        HermitianMatrix { dim, lower }
    }

    /// Rank-one matrix `q qᴴ`.
    pub fn outer(q: &[Complex64]) -> Self {
        let dim = q.len();
        let mut lower = Vec::with_capacity(dim * (dim + 1) / 2);
        for col in 0..dim {
            for row in col..dim {
                let v = q[row] * q[col].conj();
                lower.push(if row == col {
                    Complex64::new(v.re, 0.0)
                } else {
                    v
                });
            }
        }
        HermitianMatrix { dim, lower }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        if row >= col {
            self.lower[Self::lower_offset(self.dim, row, col)]
        } else {
            self.lower[Self::lower_offset(self.dim, col, row)].conj()
        }
    }

    fn lower_offset(dim: usize, row: usize, col: usize) -> usize {
        // Column-major packed lower triangle: column c starts after
        // sum_{i<c} (dim - i) entries.
        col * dim - col * (col + 1) / 2 + col + (row - col)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    /// Real symmetric embedding `[[X, −Y], [Y, X]]` of `X + iY`; it is
    /// positive semidefinite exactly when the Hermitian matrix is.
    pub fn real_embedding(&self) -> DMatrix<f64> {
        let d = self.dim;
        let mut w = DMatrix::zeros(2 * d, 2 * d);
        for i in 0..d {
            for j in 0..d {
                let v = self.get(i, j);
                w[(i, j)] = v.re;
                w[(d + i, d + j)] = v.re;
                w[(i, d + j)] = -v.im;
                w[(d + i, j)] = v.im;
            }
        }
        w
    }

    /// Smallest eigenvalue, computed through the real embedding.
    pub fn min_eigenvalue(&self) -> f64 {
        let w = self.real_embedding();
        let eig = nalgebra::SymmetricEigen::new(w);
        eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Trigonometric polynomial `r_0 + Σ_{k=1}^{n} (r_k z^{-k} + conj(r_k) z^k)`,
/// real-valued on the unit circle.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    coeffs: Vec<Complex64>,
}

impl TrigPolynomial {
    pub fn new(mut coeffs: Vec<Complex64>) -> Result<Self, GramError> {
        if coeffs.is_empty() {
            return Err(GramError::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        if coeffs[0].im.abs() > HERMITIAN_TOLERANCE {
            return Err(GramError::NotHermitian {
                max_asymmetry: coeffs[0].im.abs(),
            });
        }
        coeffs[0].im = 0.0;
        Ok(TrigPolynomial { coeffs })
    }

    /// The constant polynomial one, padded to `n + 1` coefficients.
    pub fn one(order: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); order + 1];
        coeffs[0] = Complex64::new(1.0, 0.0);
        TrigPolynomial { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Value at `z = e^{iω}`; real up to rounding.
    pub fn eval(&self, omega: f64) -> Complex64 {
        let mut acc = self.coeffs[0];
        for (k, &r) in self.coeffs.iter().enumerate().skip(1) {
            let phase = Complex64::new(0.0, -(k as f64) * omega).exp();
            acc += r * phase + r.conj() * phase.conj();
        }
        acc
    }
}

/// Polynomial `Q(z) = Σ_{κ ∈ ℐ} u_κ z^κ` stored on its support.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsePolynomial {
    support: Vec<usize>,
    coeffs: Vec<Complex64>,
}

impl SparsePolynomial {
    pub fn new(support: Vec<usize>, coeffs: Vec<Complex64>) -> Result<Self, GramError> {
        if support.len() != coeffs.len() {
            return Err(GramError::DimensionMismatch {
                expected: support.len(),
                got: coeffs.len(),
            });
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GramError::UnsupportedSupport(
                "support indices must be strictly increasing".into(),
            ));
        }
        Ok(SparsePolynomial { support, coeffs })
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.support.last().copied().unwrap_or(0)
    }

    /// `Q(e^{iω})`.
    pub fn eval(&self, omega: f64) -> Complex64 {
        self.support
            .iter()
            .zip(&self.coeffs)
            .map(|(&kappa, &u)| u * Complex64::new(0.0, kappa as f64 * omega).exp())
            .sum()
    }

    /// `|Q(e^{iω})|²` together with its first and second ω-derivatives.
    pub fn modulus_squared_jet(&self, omega: f64) -> (f64, f64, f64) {
        let mut f = Complex64::new(0.0, 0.0);
        let mut f1 = Complex64::new(0.0, 0.0);
        let mut f2 = Complex64::new(0.0, 0.0);
        for (&kappa, &u) in self.support.iter().zip(&self.coeffs) {
            let k = kappa as f64;
            let e = u * Complex64::new(0.0, k * omega).exp();
            f += e;
            f1 += Complex64::new(0.0, k) * e;
            f2 += Complex64::new(-k * k, 0.0) * e;
        }
        let value = f.norm_sqr();
        let d1 = 2.0 * (f1 * f.conj()).re;
        let d2 = 2.0 * (f2 * f.conj()).re + 2.0 * f1.norm_sqr();
        (value, d1, d2)
    }

    /// Dense coefficient vector of length `len` (zero off the support).
    pub fn to_dense(&self, len: usize) -> Vec<Complex64> {
        let mut dense = vec![Complex64::new(0.0, 0.0); len];
        for (&kappa, &u) in self.support.iter().zip(&self.coeffs) {
            dense[kappa] = u;
        }
        dense
    }
}

/// Lower-diagonal sums `out[k] = Σ_i H[i + k, i]`.
///
/// For `H = q qᴴ` this is the autocorrelation of `q`, which is what makes the
/// rank-one Gram matrix of `|Q|²` consistent with the evaluation convention.
pub fn toeplitz_adjoint(h: &HermitianMatrix) -> Vec<Complex64> {
    let d = h.dim();
    (0..d)
        .map(|k| (0..d - k).map(|i| h.get(i + k, i)).sum())
        .collect()
}

/// Whether `G` is a Gram matrix of `R`, i.e. `toeplitz_adjoint(G) = r`
/// within `1e-9`.
pub fn gram_membership(g: &HermitianMatrix, r: &TrigPolynomial) -> Result<bool, GramError> {
    if g.dim() != r.order() + 1 {
        return Err(GramError::DimensionMismatch {
            expected: r.order() + 1,
            got: g.dim(),
        });
    }
    let adj = toeplitz_adjoint(g);
    Ok(adj
        .iter()
        .zip(r.coeffs())
        .all(|(a, b)| (a - b).norm() <= 1e-9))
}

/// Whether every element of `poly_support` is a difference of two elements
/// of `support` (the existence criterion for a compact Gram representation
/// through the selection map of `support`).
pub fn compact_support_check(poly_support: &[i64], support: &[usize]) -> bool {
    let mut diffs = std::collections::HashSet::new();
    for &i in support {
        for &j in support {
            diffs.insert(i as i64 - j as i64);
        }
    }
    poly_support.iter().all(|d| diffs.contains(d))
}

/// `toeplitz_adjoint(C_ℐ S C_ℐᴴ)` computed on the index pairs directly,
/// without materializing the `n_* × n_*` lift.
pub fn compact_toeplitz_adjoint(
    s: &HermitianMatrix,
    support: &[usize],
    n_star: usize,
) -> Result<Vec<Complex64>, GramError> {
    if s.dim() != support.len() {
        return Err(GramError::DimensionMismatch {
            expected: support.len(),
            got: s.dim(),
        });
    }
    let mut out = vec![Complex64::new(0.0, 0.0); n_star];
    for (p, &i) in support.iter().enumerate() {
        for (q, &ip) in support.iter().enumerate() {
            if i >= ip {
                let d = i - ip;
                debug_assert!(d < n_star, "support index outside the virtual grid");
                out[d] += s.get(p, q);
            }
        }
    }
    Ok(out)
}

/// One scalar equality `Σ_{(p,q) ∈ pairs} S[p,q] = rhs`, where the pairs are
/// the positions in `S` whose support indices differ by `difference`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceEquality {
    pub difference: usize,
    pub rhs: Complex64,
    /// `(row, col)` positions with `support[row] − support[col] = difference`.
    pub pairs: Vec<(usize, usize)>,
}

/// Constraint system certifying `|Q(e^{iω})| ≤ |P(e^{iω})|` for an
/// `ℐ`-supported `Q`: a PSD block `[[S, u], [uᴴ, 1]]` plus the compact
/// Toeplitz-adjoint equalities on `S`. Equalities for differences never
/// realized by `ℐ` are identically zero and omitted.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedRealConstraints {
    /// Dimension of the PSD block, `|ℐ| + 1`.
    pub block_dim: usize,
    pub equalities: Vec<DifferenceEquality>,
}

/// Constraints for the unit envelope `|Q| ≤ 1` (right-hand side `e_1`).
pub fn bounded_real_constraints(
    support: &[usize],
    n_star: usize,
) -> Result<BoundedRealConstraints, GramError> {
    bounded_real_constraints_vs(support, n_star, &TrigPolynomial::one(0))
}

/// Constraints for a general envelope `|Q| ≤ |P|` given `R = |P|²` as a
/// trigonometric polynomial. The envelope must be representable on the
/// support: its monomials must lie in `ℐ − ℐ`.
pub fn bounded_real_constraints_vs(
    support: &[usize],
    n_star: usize,
    envelope: &TrigPolynomial,
) -> Result<BoundedRealConstraints, GramError> {
    if support.is_empty() || support[0] != 0 {
        return Err(GramError::UnsupportedSupport(
            "support must contain index 0".into(),
        ));
    }
    if support.last().copied().unwrap_or(0) >= n_star {
        return Err(GramError::DimensionMismatch {
            expected: n_star,
            got: support.last().copied().unwrap_or(0) + 1,
        });
    }
    let envelope_support: Vec<i64> = envelope
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(k, _)| k as i64)
        .collect();
    if !compact_support_check(&envelope_support, support) {
        return Err(GramError::UnsupportedSupport(format!(
            "envelope monomials {envelope_support:?} are not differences of the support"
        )));
    }

    let mut by_difference: BTreeMap<usize, Vec<(usize, usize)>> = BTreeMap::new();
    for (p, &i) in support.iter().enumerate() {
        for (q, &ip) in support.iter().enumerate() {
            if i >= ip {
                by_difference.entry(i - ip).or_default().push((p, q));
            }
        }
    }
    let equalities = by_difference
        .into_iter()
        .map(|(difference, pairs)| DifferenceEquality {
            difference,
            rhs: envelope
                .coeffs()
                .get(difference)
                .copied()
                .unwrap_or(Complex64::new(0.0, 0.0)),
            pairs,
        })
        .collect();
    Ok(BoundedRealConstraints {
        block_dim: support.len() + 1,
        equalities,
    })
}

/// Projects a real symmetric view of `v` for Gram evaluation tests:
/// `ψ(e^{iω})ᴴ G ψ(e^{iω})` for `ψ(z) = (1, z, …, z^n)ᵀ`.
pub fn gram_eval(g: &HermitianMatrix, omega: f64) -> Complex64 {
    let d = g.dim();
    let psi: Vec<Complex64> = (0..d)
        .map(|k| Complex64::new(0.0, k as f64 * omega).exp())
        .collect();
    let psi_vec = DVector::from_vec(psi);
    let dense = g.to_dense();
    let product = &dense * &psi_vec;
    psi_vec.iter().zip(product.iter()).map(|(p, v)| p.conj() * v).sum()
}
