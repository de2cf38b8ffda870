//! Minimal common supporting grid construction and sample alignment.
//!
//! A common supporting grid `(f_*, γ_*, n_*)` for samplers `(f_j, γ_j, n_j)`
//! is a single uniform grid whose instants contain every sampler instant:
//! `f_* = l_j f_j` and `γ_* = l_j γ_j − a_j` for positive integers `l_j` and
//! integers `a_j ≤ 0`. Sample `k` of sampler `j` lands on virtual index
//! `l_j·k − a_j`; the set `ℐ` of hit indices and the map back to the hitting
//! samples drive the dimension-reduced program downstream.

use crate::model::{Observations, SamplingGrid};
use crate::rational::Rational;
use num_complex::Complex64;
use num_integer::Integer;
use thiserror::Error;

/// Default cap on the rate multiplier `f_*/F0`; inputs needing more are
/// rejected rather than silently building an enormous virtual grid.
pub const DEFAULT_MULTIPLIER_BOUND: u64 = 1_000_000;

/// Colliding samples observing one instant must agree this closely.
pub const COLLISION_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("invalid sampler set: {0}")]
    InvalidInput(String),
    #[error("no common supporting grid within multiplier bound {bound}")]
    NoCommonGrid { bound: u64 },
    #[error(
        "colliding samples disagree at common-grid index {index} (|Δ| = {delta:.3e}); \
         observations are corrupt or sampler metadata is wrong"
    )]
    InconsistentObservations { index: usize, delta: f64 },
}

/// The minimal common supporting grid together with the per-sampler
/// alignment integers `l_j` (rate multipliers) and `a_j` (index offsets).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommonGrid {
    pub rate_star: Rational,
    pub delay_star: Rational,
    pub count_star: usize,
    pub multipliers: Vec<u64>,
    pub offsets: Vec<i64>,
}

/// The hit-index set `ℐ` and, per index, the `(grid, sample)` pairs landing
/// on it. This is the sparse form of the selection map: a dense `n_* × N_*`
/// 0/1 matrix would be exponentially larger than the data it routes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupportSet {
    /// Strictly increasing common-grid indices that carry a sample.
    pub indices: Vec<usize>,
    /// Parallel to `indices`: the samples observing that instant.
    pub sources: Vec<Vec<(usize, usize)>>,
}

impl SupportSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Position of a common-grid index within `indices`, if it is hit.
    pub fn position(&self, index: usize) -> Option<usize> {
        self.indices.binary_search(&index).ok()
    }
}

fn checked_lcm_u64(a: u64, b: u64) -> Option<u64> {
    if a == 0 || b == 0 {
        return None;
    }
    (a / a.gcd(&b)).checked_mul(b)
}

/// Least rational `F0` with `F0/f_j` a positive integer for every sampler.
fn base_rate(grids: &[SamplingGrid], bound: u64) -> Result<Rational, GridError> {
    let mut num: u64 = 1;
    let mut den: i64 = 0;
    for g in grids {
        let n = g.rate.numerator().unsigned_abs();
        num = checked_lcm_u64(num, n).ok_or(GridError::NoCommonGrid { bound })?;
        if num > i64::MAX as u64 {
            return Err(GridError::NoCommonGrid { bound });
        }
        den = den.gcd(&g.rate.denominator());
    }
    Ok(Rational::new(num as i64, den))
}

/// Finds the minimal common supporting grid with the default multiplier bound.
pub fn find_common_grid(grids: &[SamplingGrid]) -> Result<CommonGrid, GridError> {
    find_common_grid_bounded(grids, DEFAULT_MULTIPLIER_BOUND)
}

/// Finds the minimal common supporting grid.
///
/// The rate is the smallest positive integer multiple `k` of the base rate
/// (the rational lcm of the sampler rates) making every `l_j γ_j` congruent
/// modulo one, so that integer offsets `a_j` exist. Then
/// `γ_* = max_j l_j γ_j`, `a_j = l_j γ_j − γ_*`, and
/// `n_* = max_j { l_j (n_j − 1) − a_j } + 1` so the zero-based index range
/// covers the largest hit index.
pub fn find_common_grid_bounded(
    grids: &[SamplingGrid],
    bound: u64,
) -> Result<CommonGrid, GridError> {
    if grids.is_empty() {
        return Err(GridError::InvalidInput("empty sampler set".into()));
    }
    for (j, g) in grids.iter().enumerate() {
        if !g.rate.is_positive() {
            return Err(GridError::InvalidInput(format!(
                "sampler {j} has non-positive rate {}",
                g.rate
            )));
        }
        if g.count < 1 {
            return Err(GridError::InvalidInput(format!("sampler {j} has no samples")));
        }
    }

    let f0 = base_rate(grids, bound)?;
    let mu: Vec<u64> = grids
        .iter()
        .map(|g| (f0 / g.rate).to_integer() as u64)
        .collect();

    // Smallest k with k·(μ_j γ_j − μ_0 γ_0) ∈ ℤ for all j.
    let r0 = grids[0].delay * mu[0] as i64;
    let mut k: u64 = 1;
    for (g, &m) in grids.iter().zip(&mu) {
        let delta = g.delay * m as i64 - r0;
        k = checked_lcm_u64(k, delta.denominator() as u64)
            .ok_or(GridError::NoCommonGrid { bound })?;
        if k > bound {
            return Err(GridError::NoCommonGrid { bound });
        }
    }

    let mut multipliers: Vec<u64> = Vec::with_capacity(grids.len());
    for &m in &mu {
        let l = m
            .checked_mul(k)
            .filter(|&l| l <= i64::MAX as u64)
            .ok_or(GridError::NoCommonGrid { bound })?;
        multipliers.push(l);
    }

    let scaled_delays: Vec<Rational> = grids
        .iter()
        .zip(&multipliers)
        .map(|(g, &l)| g.delay * l as i64)
        .collect();
    let mut delay_star = scaled_delays[0];
    for &d in &scaled_delays[1..] {
        if d > delay_star {
            delay_star = d;
        }
    }
    let offsets: Vec<i64> = scaled_delays
        .iter()
        .map(|&d| (d - delay_star).to_integer())
        .collect();

    let mut rate_star = f0 * k as i64;

    // A minimal k already forces gcd({a_j} ∪ {l_j}) = 1; the reduction below
    // keeps the minimality invariant explicit for any future construction path.
    let mut g = 0u64;
    for &a in &offsets {
        g = g.gcd(&a.unsigned_abs());
    }
    for &l in &multipliers {
        g = g.gcd(&l);
    }
    let (multipliers, offsets) = if g > 1 {
        rate_star = rate_star / Rational::from_integer(g as i64);
        delay_star = delay_star / Rational::from_integer(g as i64);
        (
            multipliers.iter().map(|&l| l / g).collect(),
            offsets.iter().map(|&a| a / g as i64).collect(),
        )
    } else {
        (multipliers, offsets)
    };

    let count_star = grids
        .iter()
        .zip(multipliers.iter().zip(&offsets))
        .map(|(grid, (&l, &a))| l as i64 * (grid.count as i64 - 1) - a)
        .max()
        .expect("nonempty") as usize
        + 1;

    Ok(CommonGrid {
        rate_star,
        delay_star,
        count_star,
        multipliers,
        offsets,
    })
}

/// Enumerates the hit indices `l_j·k − a_j` and their hitting samples.
pub fn support_set(grids: &[SamplingGrid], cg: &CommonGrid) -> SupportSet {
    debug_assert_eq!(grids.len(), cg.multipliers.len());
    let mut hits: Vec<(usize, usize, usize)> = Vec::new();
    for (j, grid) in grids.iter().enumerate() {
        let l = cg.multipliers[j] as i64;
        let a = cg.offsets[j];
        for k in 0..grid.count {
            let index = l * k as i64 - a;
            debug_assert!(index >= 0 && (index as usize) < cg.count_star);
            hits.push((index as usize, j, k));
        }
    }
    hits.sort_unstable();
    let mut indices = Vec::new();
    let mut sources: Vec<Vec<(usize, usize)>> = Vec::new();
    for (index, j, k) in hits {
        if indices.last() == Some(&index) {
            sources.last_mut().expect("nonempty").push((j, k));
        } else {
            indices.push(index);
            sources.push(vec![(j, k)]);
        }
    }
    SupportSet { indices, sources }
}

/// Collapses the per-sampler observations onto the support set, one value per
/// hit index. Samples colliding on one instant must agree within
/// [`COLLISION_TOLERANCE`]; the first (in grid order) is kept.
pub fn merge_collisions(
    obs: &Observations,
    sup: &SupportSet,
) -> Result<Vec<Complex64>, GridError> {
    let mut merged = Vec::with_capacity(sup.len());
    for (pos, group) in sup.sources.iter().enumerate() {
        let (j0, k0) = group[0];
        let value = obs.grid(j0)[k0];
        for &(j, k) in &group[1..] {
            let delta = (obs.grid(j)[k] - value).norm();
            if delta > COLLISION_TOLERANCE {
                return Err(GridError::InconsistentObservations {
                    index: sup.indices[pos],
                    delta,
                });
            }
        }
        merged.push(value);
    }
    Ok(merged)
}
