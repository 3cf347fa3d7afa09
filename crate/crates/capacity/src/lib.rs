//! Potential theory for finite subsets of Z⁴.
//!
//! Capacity comes from the last-exit system Σ_{x̃∈A} G_D(x - x̃) e(x̃) = 1,
//! whose solution is the vector of escape probabilities. Monte Carlo escape
//! estimates and a time-domain first-passage recursion serve as independent
//! checks of the linear-algebra route.

mod dp;
mod matrix;
mod mc;

pub use dp::{restricted_green_dp, DpConfig, DpResult};
pub use matrix::{
    equilibrium_capacity, escape_probability, green_matrix, EquilibriumSolution, GreenMatrix,
    pairwise_sum, SolveConfig,
};
pub use mc::{
    green_envelope, mc_capacity, mc_capacity_in, mc_escape, run_walk, Fate, McCapacity, McEscape, McEscapeConfig,
    Target,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CapacityError {
    #[error("set is empty")]
    Empty,
    #[error("set has {len} points, budget is {max}")]
    Budget { len: usize, max: usize },
    #[error(transparent)]
    Green(#[from] lattice_green::GreenError),
    #[error("Cholesky pivot {pivot:e} at row {row} is below 1/4")]
    Conditioning { row: usize, pivot: f64 },
    #[error("probability {value} outside [-{tol}, 1+{tol}]")]
    Tolerance { value: f64, tol: f64 },
    #[error("point {0:?} is not in the set")]
    NotInSet([i32; 4]),
    #[error("invalid parameter: {0}")]
    Parameter(String),
}
