//! Seeded scenario generators shared by the integration and acceptance
//! suites. Everything is driven by an explicit ChaCha stream so runs are
//! reproducible.

#![allow(dead_code)]

use mrss_core::commongrid::{find_common_grid, support_set, CommonGrid, SupportSet};
use mrss_core::model::{SamplingGrid, SpikeSignal};
use mrss_core::rational::Rational;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A sampler set together with its alignment data.
pub struct GridScenario {
    pub grids: Vec<SamplingGrid>,
    pub common: CommonGrid,
    pub support: SupportSet,
}

/// Draws sampler sets with small rational rates and delays until one admits
/// a common grid with `count_star` within the given range.
pub fn random_grid_scenario(
    rng: &mut ChaCha8Rng,
    max_samplers: usize,
    n_star_range: std::ops::RangeInclusive<usize>,
) -> GridScenario {
    loop {
        let m = rng.random_range(1..=max_samplers);
        let grids: Vec<SamplingGrid> = (0..m)
            .map(|_| {
                let rate = Rational::new(rng.random_range(1..=6), rng.random_range(1..=4));
                let delay = Rational::new(rng.random_range(-4..=4), rng.random_range(1..=4));
                let count = rng.random_range(3..=8);
                SamplingGrid::new(rate, delay, count)
            })
            .collect();
        let Ok(common) = find_common_grid(&grids) else {
            continue;
        };
        if !n_star_range.contains(&common.count_star) {
            continue;
        }
        let support = support_set(&grids, &common);
        if support.len() < 3 {
            continue;
        }
        return GridScenario {
            grids,
            common,
            support,
        };
    }
}

/// Draws a spike signal whose normalized frequencies keep a wrap-around
/// separation of at least `margin_factor · 4/(n_* − 1)`. Gives up (returns
/// `None`) when the separation demand cannot be met after many draws.
pub fn random_separated_signal(
    rng: &mut ChaCha8Rng,
    spikes: usize,
    rate_star: f64,
    n_star: usize,
    margin_factor: f64,
) -> Option<SpikeSignal> {
    let threshold = margin_factor * 4.0 / (n_star as f64 - 1.0);
    if spikes as f64 * threshold >= 1.0 {
        return None;
    }
    'outer: for _ in 0..2000 {
        let mut nus: Vec<f64> = (0..spikes).map(|_| rng.random_range(0.0..1.0)).collect();
        nus.sort_by(f64::total_cmp);
        for i in 0..nus.len() {
            let gap = if i + 1 < nus.len() {
                nus[i + 1] - nus[i]
            } else if nus.len() > 1 {
                nus[0] + 1.0 - nus[i]
            } else {
                f64::INFINITY
            };
            if gap < threshold {
                continue 'outer;
            }
        }
        let amplitudes: Vec<Complex64> = (0..spikes)
            .map(|_| {
                let magnitude = rng.random_range(0.5..2.0);
                let phase = rng.random_range(0.0..TAU);
                Complex64::from_polar(magnitude, phase)
            })
            .collect();
        let frequencies = nus.iter().map(|&nu| nu * rate_star).collect();
        return Some(SpikeSignal::new(frequencies, amplitudes));
    }
    None
}

/// The delay-only family: one undelayed sampler plus one sampler per `b_j`
/// delayed by `−1/b_j`, all at the same rate and count.
pub fn delay_only_grids(rate: Rational, count: usize, denominators: &[i64]) -> Vec<SamplingGrid> {
    let mut grids = vec![SamplingGrid::new(rate, Rational::zero(), count)];
    for &b in denominators {
        grids.push(SamplingGrid::new(rate, Rational::new(-1, b), count));
    }
    grids
}
