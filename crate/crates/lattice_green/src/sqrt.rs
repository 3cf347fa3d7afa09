//! Convolutional square root G̃_D = Σ_k c_k p_k with c_k the Taylor
//! coefficients of (1-x)^{-1/2}, and step-series partial sums of G_D.

use crate::transition::{PlaneCache, TransitionEngine};
use crate::{Estimate, GreenError, LatticePoint};
use std::f64::consts::PI;

/// c_k = (2k)!/(4^k (k!)²) for k = 0..=n.
pub fn sqrt_coefficients(n: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(n + 1);
    c.push(1.0);
    for k in 1..=n {
        let prev = c[k - 1];
        c.push(prev * (2 * k - 1) as f64 / (2 * k) as f64);
    }
    c
}

/// Safety factor on the local limit envelope p_k(z) ≤ 8/(π²(k-1)²).
pub const LCLT_MARGIN: f64 = 1.1;

/// Envelope for p_k(z), any z, k ≥ 2: p_k(z) ≤ p_{2⌊k/2⌋}(0) ≲ 8/(π² (2⌊k/2⌋)²).
pub fn p_envelope(k: usize) -> f64 {
    if k < 2 {
        return 1.0;
    }
    let e = (2 * (k / 2)) as f64;
    LCLT_MARGIN * 8.0 / (PI * PI * e * e)
}

/// Bound on Σ_{k>K} c_k p_k(z) from c_k ≤ (πk)^{-1/2} and the envelope.
pub fn sqrt_tail_bound(k_cut: usize) -> f64 {
    let k0 = k_cut.max(2) as f64 - 1.0;
    LCLT_MARGIN * 8.0 / PI.powf(2.5) * (2.0 / 3.0) * k0.powf(-1.5)
}

/// Truncated series Σ_{k≤K} c_k p_k(z) with the tail bound as its error.
pub fn green_sqrt_d(
    z: LatticePoint,
    k_cut: usize,
    engine: &TransitionEngine,
) -> Result<Estimate, GreenError> {
    let mut cache = PlaneCache::default();
    green_sqrt_d_cached(z, k_cut, engine, &mut cache)
}

pub fn green_sqrt_d_cached(
    z: LatticePoint,
    k_cut: usize,
    engine: &TransitionEngine,
    cache: &mut PlaneCache,
) -> Result<Estimate, GreenError> {
    let p = engine.series_cached(z, k_cut, cache)?;
    let c = sqrt_coefficients(k_cut);
    let v: f64 = c.iter().zip(&p).map(|(a, b)| a * b).sum();
    Ok(Estimate::new(v, sqrt_tail_bound(k_cut)))
}

/// Σ_{k≤K} p_k(z) and an extrapolated tail.
#[derive(Debug, Clone, Copy)]
pub struct SeriesSum {
    pub partial: f64,
    pub tail: f64,
    /// Size of the first-order correction used in the tail; taken as the error.
    pub tail_err: f64,
}

impl SeriesSum {
    pub fn value(&self) -> f64 {
        self.partial + self.tail
    }
}

/// Partial sum of G_D(0) = Σ_k p_k(0) with the tail Σ_{k>K even} p_k(0)
/// extrapolated from the local limit law L(k) = 8/(π² k²) with a first-order
/// correction fitted at the cutoff: p_k ≈ L(k)(1 + c₁/k).
pub fn green_d_origin_series(
    k_cut: usize,
    engine: &TransitionEngine,
) -> Result<SeriesSum, GreenError> {
    let k_cut = k_cut & !1;
    let p = engine.series(LatticePoint::ORIGIN, k_cut)?;
    let partial: f64 = p.iter().sum();
    let lk = 8.0 / (PI * PI * (k_cut * k_cut) as f64);
    let c1 = k_cut as f64 * (p[k_cut] / lk - 1.0);
    // even k = 2m, m > M
    let m = (k_cut / 2) as f64;
    let inv2 = 1.0 / m - 0.5 / (m * m) + 1.0 / (6.0 * m * m * m);
    let inv3 = 0.5 / (m * m) - 0.5 / (m * m * m);
    let base = 2.0 / (PI * PI) * inv2;
    let corr = c1 / (PI * PI) * inv3;
    Ok(SeriesSum {
        partial,
        tail: base + corr,
        tail_err: corr.abs() + base * 1e-3 / m,
    })
}
