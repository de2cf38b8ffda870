//! Spike signals, uniform samplers, and the forward observation model.
//!
//! A signal `x(t) = Σ_l α_l e^{i2π ξ_l t}` is observed by samplers
//! `(rate, delay, count)`; sampler `j` records
//! `y_j[k] = Σ_l α_l e^{i2π (ξ_l/f_j)(k − γ_j)}` for `k = 0..count`.

use crate::rational::Rational;
use num_complex::Complex64;
use std::f64::consts::TAU;

/// A uniform sampler: rate in Hz, delay in sample units, number of samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SamplingGrid {
    pub rate: Rational,
    pub delay: Rational,
    pub count: usize,
}

impl SamplingGrid {
    pub fn new(rate: Rational, delay: Rational, count: usize) -> Self {
        assert!(rate.is_positive(), "sampler rate must be positive");
        assert!(count >= 1, "sampler count must be at least one");
        SamplingGrid { rate, delay, count }
    }

    /// Time instant of sample `k`, exactly: `(k − delay)/rate`.
    pub fn instant(&self, k: usize) -> Rational {
        (Rational::from_integer(k as i64) - self.delay) / self.rate
    }
}

/// A sparse spectral signal: frequency/amplitude pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeSignal {
    pub frequencies: Vec<f64>,
    pub amplitudes: Vec<Complex64>,
}

impl SpikeSignal {
    pub fn new(frequencies: Vec<f64>, amplitudes: Vec<Complex64>) -> Self {
        assert_eq!(
            frequencies.len(),
            amplitudes.len(),
            "frequency and amplitude counts differ"
        );
        SpikeSignal {
            frequencies,
            amplitudes,
        }
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Sum of amplitude moduli (the atomic total-variation norm).
    pub fn tv_norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm()).sum()
    }
}

/// Per-sampler observation vectors, indexed like the sampler list.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    per_grid: Vec<Vec<Complex64>>,
}

impl Observations {
    pub fn new(per_grid: Vec<Vec<Complex64>>) -> Self {
        Observations { per_grid }
    }

    pub fn grid(&self, j: usize) -> &[Complex64] {
        &self.per_grid[j]
    }

    pub fn num_grids(&self) -> usize {
        self.per_grid.len()
    }

    pub fn vectors(&self) -> &[Vec<Complex64>] {
        &self.per_grid
    }

    /// Total number of samples across all samplers.
    pub fn total_len(&self) -> usize {
        self.per_grid.iter().map(Vec::len).sum()
    }
}

/// `e^{i2π turns}` with the argument reduced modulo one turn first, so large
/// `k·ξ` products do not leak phase error into sin/cos.
pub(crate) fn unit_phasor(turns: f64) -> Complex64 {
    let reduced = turns - turns.floor();
    let angle = TAU * reduced;
    Complex64::new(angle.cos(), angle.sin())
}

/// Samples the signal on a single grid.
pub fn apply_forward(signal: &SpikeSignal, grid: &SamplingGrid) -> Vec<Complex64> {
    (0..grid.count)
        .map(|k| {
            let t = grid.instant(k).to_f64();
            signal
                .frequencies
                .iter()
                .zip(&signal.amplitudes)
                .map(|(&xi, &alpha)| alpha * unit_phasor(xi * t))
                .sum()
        })
        .collect()
}

/// Samples the signal on every grid of the multi-rate system.
pub fn sample(signal: &SpikeSignal, grids: &[SamplingGrid]) -> Observations {
    assert!(!grids.is_empty(), "at least one sampler is required");
    Observations::new(grids.iter().map(|g| apply_forward(signal, g)).collect())
}

/// Delay-only sampler family with geometrically refined delays:
/// grid 1 is `(1, 0, n)` and grid `j ∈ [2, m]` is `(1, −(b^j − 1)/b^j, n)`.
///
/// Its minimal common grid has `n_* = b^m·n` points for `m ≥ 2` while only
/// `m·n` of them are ever hit, which makes the full/reduced dimension gap
/// grow exponentially in `m`.
pub fn geometric_delay_grids(base: u64, m: usize, n: usize) -> Vec<SamplingGrid> {
    assert!(base >= 2 && m >= 1 && n >= 1);
    let mut grids = vec![SamplingGrid::new(Rational::one(), Rational::zero(), n)];
    let mut pow = base as i64;
    for _ in 2..=m {
        pow *= base as i64;
        grids.push(SamplingGrid::new(
            Rational::one(),
            Rational::new(-(pow - 1), pow),
            n,
        ));
    }
    grids
}
