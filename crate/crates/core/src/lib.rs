//! Super-resolution spectral estimation from multi-rate sampling systems.
//!
//! A spectrally sparse signal is observed through several uniform samplers
//! with distinct rational rates and delays. When the samplers admit a common
//! supporting grid, the total-variation dual of the recovery problem becomes
//! a semidefinite program whose optimal trigonometric polynomial has unit
//! modulus exactly at the signal frequencies. This crate builds that program
//! in both its full form (one Hermitian block per virtual grid point) and a
//! reduced form whose dimension equals the number of distinct observations,
//! solves it with a projection-splitting method, and reads the frequencies
//! and amplitudes back off the dual certificate.
//!
//! Pipeline: [`model`] simulates observations, [`commongrid`] aligns the
//! samplers on the minimal common grid, [`gram`] generates the bounded-modulus
//! constraints for sparse polynomial supports, [`sdp`] assembles the conic
//! problems, [`solver`] solves them, and [`recover`] turns the dual optimum
//! into a frequency/amplitude estimate.

pub mod commongrid;
pub mod gram;
pub mod model;
pub mod rational;
pub mod recover;
pub mod sdp;
pub mod solver;

pub use commongrid::{CommonGrid, GridError, SupportSet};
pub use gram::{GramError, HermitianMatrix, SparsePolynomial, TrigPolynomial};
pub use model::{Observations, SamplingGrid, SpikeSignal};
pub use rational::Rational;
pub use recover::{Estimate, LocalizeOptions, RecoverError, RecoveryOutcome};
pub use sdp::{ConicProblem, ConicSolution, Residuals, SolveStatus};
pub use solver::{Scaling, SolverConfig, SolverError};
