//! Discrete Langevin dynamics: locally balanced rates, per-site transition
//! rows, and exact oracles (matrix exponential, gradient-flow ODE, Gillespie
//! paths) for checking the discretizations.

mod expm;
mod flow;
mod gillespie;
mod rate;
pub(crate) mod rows;
mod weight;

pub use expm::{matrix_exponential, SquareMatrix};
pub use flow::{
    conductance_flow, default_dt, direct_flow, integrate_dwgf, Adjacency, FlowPoint, CLAMP_FLOOR,
};
pub use gillespie::{first_jump, gillespie_path, jump_rates, FirstJump, GillespiePath};
pub use rate::{full_rate_matrix, rate_row, site_rate_matrix, FullRateMatrix, RateRow, FULL_MATRIX_CAP};
pub use rows::{
    dmala_row, dmala_row_weighted, euler_row, interpolated_row, stationary_row, EulerRow,
    TransitionRow, NU_FLOOR,
};
pub use weight::{log_g, WeightFunction};
