//! The constant κ̃ = sup_g [∫∫ g²(x) G(x-y) g²(y)]^{1/4} / (‖g‖^{1/2} ‖∇g‖^{1/2}),
//! G(x) = 1/(2π²|x|²) on R⁴, over radial g on a logarithmic grid.
//!
//! For radial profiles the double integral collapses to a sum over sphere
//! pairs with the mean-value kernel 1/(2π² max(r,s)²), evaluated in O(N)
//! with prefix sums.

mod checks;
mod constants;
mod energy;
mod profile;
mod solve;

pub use checks::{
    dual_form, kernel_mc, quartic_energy_mc, second_variation, DualForm, KernelSample, McEnergy,
    SecondVariation,
};
pub use constants::{deviation_constants, DeviationConstants};
pub use energy::{energies, gn_ratio, log_ratio_gradient, quartic_energy, ratio_gradient, Energies};
pub use profile::RadialProfile;
pub use solve::{maximize_ratio, GnConfig, GnResult};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GnError {
    #[error("degenerate profile: {0}")]
    Degenerate(&'static str),
    #[error("invalid grid: {0}")]
    Grid(&'static str),
    #[error("kappa must be positive, got {0}")]
    Domain(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// 2π², the area of the unit sphere S³.
pub const SPHERE_AREA: f64 = 2.0 * std::f64::consts::PI * std::f64::consts::PI;
