use crate::GnError;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationConstants {
    /// I₄(λ) = (2/π⁴) κ̃⁻⁴ λ.
    pub rate: f64,
    /// (π⁴/2) κ̃⁴.
    pub lil_constant: f64,
}

pub fn deviation_constants(kappa: f64, lambda: f64) -> Result<DeviationConstants, GnError> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(GnError::Domain(kappa));
    }
    if !(lambda >= 0.0) {
        return Err(GnError::Config(format!("lambda must be ≥ 0, got {lambda}")));
    }
    let p4 = PI.powi(4);
    Ok(DeviationConstants {
        rate: 2.0 / p4 * kappa.powi(-4) * lambda,
        lil_constant: p4 / 2.0 * kappa.powi(4),
    })
}
