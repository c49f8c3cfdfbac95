//! Exact population and Langevin dynamics of a harmonic oscillator coupled to
//! a finite bosonic bath through a number-conserving quadratic Hamiltonian.
//!
//! Every many-body quantity reduces to the one-particle amplitudes
//! `A_nm(t) = <psi_m| exp(-i h t) |psi_n>`, evaluated in closed form from the
//! normal modes of `h`. On top of them this crate builds
//!
//! * the exact master equation `dN/dt = W(t) N` with `W = dP/dt P^{-1}`
//!   ([`master`]),
//! * the exact Langevin coefficients `Omega^2(t)`, `Gamma(t)` of the system
//!   oscillator ([`langevin`]),
//! * golden-rule rates and exponential-regime fits to compare against
//!   ([`golden`]).
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar to `f64`.

// NaN-aware comparisons and index loops over matrix entries are intended.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod amplitude;
pub mod config;
pub mod error;
pub mod golden;
pub mod langevin;
pub mod linalg;
pub mod master;
pub mod model;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{Entry, Real};

pub type Hamiltonian = linalg::HermitianMatrix<f64>;
pub type Spectrum = linalg::SpectralDecomposition<f64>;
pub type Model = model::ModelSpec<f64>;
pub type Populations = model::InitialPopulations<f64>;
pub type Amplitudes = amplitude::AmplitudeSet<f64>;
pub type Survival = amplitude::SurvivalPoint<f64>;
pub type Transitions = master::TransitionProbabilities<f64>;
pub type Rates = master::MasterCoefficients<f64>;
pub type Trajectory = master::PopulationTrajectory<f64>;
pub type Coefficients = langevin::LangevinCoefficients<f64>;
pub type GoldenRates = golden::GoldenRuleRates<f64>;
pub type Prediction = golden::PerturbativePrediction<f64>;
pub type Fit = golden::ExponentialFit<f64>;
