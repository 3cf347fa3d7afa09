//! Continuum kernels on R⁴ and the lattice-to-continuum comparison.
//!
//! Normalisation: standard Brownian motion, P_t(x) = (2πt)^{-2} e^{-|x|²/2t}.
//! Then G(x) = ∫P_t dt = 1/(2π²|x|²) and G̃(x) = ∫(πt)^{-1/2}P_t dt = c₃/|x|³
//! with c₃ = 1/(2√2 π²); G̃ ⋆ G̃ = G follows from
//! ∫|a|^{-3}|e-a|^{-3} da = 4π².

use crate::fourier::{green_sqrt_bessel, FourierConfig};
use crate::quad::{adaptive, GaussLegendre};
use crate::{ContinuumPoint, GreenError, LatticePoint};
use std::f64::consts::PI;

/// c₃ in G̃(x) = c₃ |x|^{-3}.
pub const C3_SQRT: f64 = 1.0 / (2.0 * std::f64::consts::SQRT_2 * PI * PI);

/// G(x) = 1/(2π²|x|²).
pub fn continuum_green(x: ContinuumPoint) -> Result<f64, GreenError> {
    let r2: f64 = x.0.iter().map(|c| c * c).sum();
    if r2 == 0.0 {
        return Err(GreenError::Singular);
    }
    Ok(1.0 / (2.0 * PI * PI * r2))
}

/// G̃(x) = c₃/|x|³.
pub fn continuum_green_sqrt(x: ContinuumPoint) -> Result<f64, GreenError> {
    let r = x.norm();
    if r == 0.0 {
        return Err(GreenError::Singular);
    }
    Ok(C3_SQRT / (r * r * r))
}

/// c₃ from the time integral ∫_0^∞ (πt)^{-1/2} P_t(e₁) dt, by quadrature in s = ln t.
pub fn sqrt_constant_by_quadrature() -> f64 {
    let rule = GaussLegendre::new(20);
    let f = |s: f64| {
        let t = s.exp();
        let p = (-0.5 / t).exp() / (2.0 * PI * t).powi(2);
        t * p / (PI * t).sqrt()
    };
    adaptive(&rule, -8.0, 60.0, 1e-15, 500, f).value
}

/// ∫_{R⁴} G̃(a) G̃(e₁ - a) da by radial quadrature:
/// 4π c₃² ∫_0^1 (1+s) I(s) ds, I(s) = ∫_0^π sin²θ (1 - 2s cosθ + s²)^{-3/2} dθ,
/// where the r > 1 half is folded onto (0,1) by r → 1/r. Both integrals use
/// Gauss–Legendre on panels graded geometrically toward the near-singular point.
pub fn sqrt_self_convolution_radial() -> f64 {
    let rule = GaussLegendre::new(20);
    let graded = |len: f64, scale: f64| -> Vec<(f64, f64)> {
        // panels [0,scale],[scale,2 scale],... measured from the singular end
        let mut edges = vec![0.0];
        let mut e = scale;
        while e < len {
            edges.push(e);
            e *= 2.0;
        }
        edges.push(len);
        edges.windows(2).map(|w| (w[0], w[1])).collect()
    };
    let inner = |s: f64| {
        let g = |th: f64| {
            let u = 1.0 - s;
            let h = (0.5 * th).sin();
            let d = u * u + 4.0 * s * h * h;
            th.sin().powi(2) / (d * d.sqrt())
        };
        graded(PI, (1.0 - s).max(1e-15))
            .into_iter()
            .map(|(a, b)| rule.integrate(a, b, g))
            .sum::<f64>()
    };
    // u = 1 - s
    let outer: f64 = graded(1.0, 1e-15)
        .into_iter()
        .map(|(a, b)| rule.integrate(a, b, |u| (2.0 - u) * inner(1.0 - u)))
        .sum();
    4.0 * PI * C3_SQRT * C3_SQRT * outer
}

/// Outcome of comparing the rescaled lattice square root with the continuum one.
#[derive(Debug, Clone, Copy)]
pub struct ComparisonReport {
    pub lattice_point: LatticePoint,
    pub residual: f64,
    pub bound: f64,
    pub eps: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct CompareConfig {
    /// Exponent ε of the error bound; `None` picks the ε minimising the bound.
    pub eps: Option<f64>,
    pub slack: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            eps: None,
            slack: 10.0,
        }
    }
}

/// n^{5ε/2}/(n|z|²) + n² e^{-n^{ε/2}}.
pub fn comparison_bound(n: f64, znorm: f64, eps: f64) -> f64 {
    n.powf(2.5 * eps) / (n * znorm * znorm) + n * n * (-n.powf(0.5 * eps)).exp()
}

fn best_eps(n: f64, znorm: f64) -> f64 {
    (1..=1000)
        .map(|i| i as f64 / 1000.0)
        .filter(|&e| znorm >= n.powf(-0.25 * e))
        .min_by(|a, b| {
            comparison_bound(n, znorm, *a).total_cmp(&comparison_bound(n, znorm, *b))
        })
        .unwrap_or(1.0)
}

/// |n^{3/2} G̃_D(x) - 2 G̃(x/√n)| with x = round(√n z), against the bound.
pub fn compare_disc_cont(
    z: ContinuumPoint,
    n: f64,
    cfg: &CompareConfig,
) -> Result<ComparisonReport, GreenError> {
    let zn = z.norm();
    let eps = cfg.eps.unwrap_or_else(|| best_eps(n, zn));
    let threshold = n.powf(-0.25 * eps);
    if zn < threshold {
        return Err(GreenError::Domain {
            norm: zn,
            threshold,
        });
    }
    let s = n.sqrt();
    let x = LatticePoint(z.0.map(|c| (c * s).round() as i32));
    if x == LatticePoint::ORIGIN {
        return Err(GreenError::Domain {
            norm: zn,
            threshold,
        });
    }
    let zq = x.to_continuum().scaled(1.0 / s);
    let fcfg = FourierConfig {
        quad_tol: 1e-8,
        target: 1e-16,
    };
    let gd = green_sqrt_bessel(x, &fcfg)?.value;
    let residual = (n * s * gd - 2.0 * continuum_green_sqrt(zq)?).abs();
    let bound = comparison_bound(n, zn, eps);
    Ok(ComparisonReport {
        lattice_point: x,
        residual,
        bound,
        eps,
        violated: residual > bound * cfg.slack,
    })
}
