//! Lattice Green's functions for simple random walk on Z⁴.
//!
//! Two independent evaluation routes are provided for G_D and its
//! convolutional square root G̃_D: an integral over the continuous-time
//! heat kernel (products of modified Bessel functions) and the exact
//! step series Σ c_k p_k(z) built from exact transition probabilities.

pub mod bessel;
pub mod continuum;
pub mod convolution;
mod error;
pub mod fourier;
pub mod point;
pub mod quad;
pub mod sqrt;
pub mod table;
pub mod transition;

pub use continuum::{
    compare_disc_cont, continuum_green, continuum_green_sqrt, ComparisonReport, CompareConfig,
    C3_SQRT,
};
pub use error::GreenError;
pub use fourier::{green_d, green_sqrt_bessel, FourierConfig};
pub use point::{ContinuumPoint, LatticePoint};
pub use sqrt::{green_sqrt_d, sqrt_coefficients};

pub use table::{GreenTable, MissPolicy, TableConfig};
pub use transition::{transition_prob, TransitionEngine};

/// A value with an absolute error bound attached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub err: f64,
}

impl Estimate {
    pub fn new(value: f64, err: f64) -> Self {
        Self { value, err }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, err: 0.0 }
    }
}
