//! Discrete Langevin samplers and the exact oracles that check them.
//!
//! The crate is organised around five pieces:
//!
//! * [`model`]: discrete energy models (Bernoulli, Ising/Potts, FHMM, RBM),
//!   their exact local ratios, relaxed gradients and parameter files.
//! * [`dynamics`]: locally balanced rate matrices, per-site transition rows
//!   (interpolated, forward Euler, DMALA), matrix exponentials, the
//!   gradient-flow ODE and Gillespie simulation.
//! * [`samplers`]: MH-corrected kernels (RWM, block Gibbs, Hamming ball, GWG,
//!   PAS, DMALA, DLMCf, DLMC) and the acceptance-rate tuner.
//! * [`diagnostics`]: effective sample size and exact-distribution comparisons.
//! * [`harness`]: experiment configuration, the parallel runner and the
//!   invariant validation suite.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod diagnostics;
pub mod distribution;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod model;
pub mod samplers;
pub mod state;

pub use distribution::DenseDistribution;
pub use error::{Error, Result};
pub use model::{EnergyModel, Model, RatioSource};
pub use state::State;
