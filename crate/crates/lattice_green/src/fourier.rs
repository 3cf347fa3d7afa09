//! G_D and G̃_D as integrals over the continuous-time heat kernel.
//!
//! With X_t the rate-1 continuous-time walk, P(X_t = z) = Π_i e^{-t/4} I_{z_i}(t/4)
//! and the number of jumps by time t is Poisson(t). Hence
//!   G_D(z)  = ∫_0^∞ P(X_t = z) dt,
//!   G̃_D(z) = ∫_0^∞ (πt)^{-1/2} P(X_t = z) dt,
//! since ∫ (πt)^{-1/2} t^k e^{-t}/k! dt = (2k)!/(4^k (k!)^2). The Fourier
//! integrand 1/(1 - ¼Σcos 2πl_i) is the Laplace transform of the same kernel,
//! so this is the Fourier integral with the singular l-integration done in
//! closed form. The tail t > T is integrated term by term from the
//! large-argument expansion of I_n.

use crate::bessel::{asymptotic_coeffs, scaled_bessel_i};
use crate::quad::{adaptive, GaussLegendre};
use crate::{Estimate, GreenError, LatticePoint};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy)]
pub struct FourierConfig {
    /// Maximum accepted error estimate.
    pub quad_tol: f64,
    /// Internal adaptive target; keep well below `quad_tol`.
    pub target: f64,
}

impl Default for FourierConfig {
    fn default() -> Self {
        Self {
            quad_tol: 1e-8,
            target: 1e-12,
        }
    }
}

const TAIL_TERMS: usize = 12;

struct Kernel {
    n: [u32; 4],
    nmax: usize,
    /// t-split: tail integrated analytically beyond x = t/4 = x_tail.
    x_tail: f64,
    tail_series: Vec<f64>,
}

impl Kernel {
    fn new(z: LatticePoint) -> Self {
        let n = z.canonical();
        let nmax = n[3] as usize;
        let x_tail = (16.0 * (nmax * nmax) as f64).max(200.0);
        let mut prod = vec![1.0];
        for &ni in &n {
            let a = asymptotic_coeffs(ni, TAIL_TERMS);
            let mut next = vec![0.0; TAIL_TERMS];
            for (i, p) in prod.iter().enumerate() {
                for (j, c) in a.iter().enumerate() {
                    if i + j < TAIL_TERMS {
                        next[i + j] += p * c;
                    }
                }
            }
            prod = next;
        }
        Self {
            n,
            nmax,
            x_tail,
            tail_series: prod,
        }
    }

    fn density(&self, t: f64, buf: &mut [f64]) -> f64 {
        scaled_bessel_i(0.25 * t, &mut buf[..=self.nmax]);
        self.n.iter().map(|&k| buf[k as usize]).product()
    }

    /// Σ_m b_m X^{-p-m}/(p+m); returns (sum, magnitude of last term).
    fn tail(&self, p: f64) -> (f64, f64) {
        let x = self.x_tail;
        let mut s = 0.0;
        let mut last = 0.0;
        for (m, b) in self.tail_series.iter().enumerate() {
            let term = b * x.powf(-p - m as f64) / (p + m as f64);
            s += term;
            last = term.abs();
        }
        (s, last)
    }
}

fn integrate_panels<F: FnMut(f64) -> f64>(
    upper: f64,
    cfg: &FourierConfig,
    mut f: F,
) -> Result<(f64, f64), GreenError> {
    let rule = GaussLegendre::new(20);
    let mut edges = vec![0.0, 0.5];
    while *edges.last().unwrap() * 2.0 < upper {
        let e = *edges.last().unwrap() * 2.0;
        edges.push(e);
    }
    edges.push(upper);
    let share = cfg.target / (edges.len() - 1) as f64;
    let mut value = 0.0;
    let mut err = 0.0;
    for w in edges.windows(2) {
        let r = adaptive(&rule, w[0], w[1], share, 200, &mut f);
        if !r.converged {
            return Err(GreenError::Quadrature {
                delta: r.err,
                tol: share,
            });
        }
        value += r.value;
        err += r.err;
    }
    Ok((value, err))
}

/// G_D(z) via the heat-kernel integral.
pub fn green_d(z: LatticePoint, cfg: &FourierConfig) -> Result<Estimate, GreenError> {
    let k = Kernel::new(z);
    let mut buf = vec![0.0; k.nmax + 1];
    let t_max = 4.0 * k.x_tail;
    let (body, qerr) = integrate_panels(t_max, cfg, |t| k.density(t, &mut buf))?;
    let (tail, tail_err) = k.tail(1.0);
    let tail = tail / (PI * PI);
    let err = qerr + tail_err / (PI * PI);
    check(err, cfg)?;
    Ok(Estimate::new(body + tail, err))
}

/// G̃_D(z) via the heat-kernel integral with weight (πt)^{-1/2}; t = u².
pub fn green_sqrt_bessel(z: LatticePoint, cfg: &FourierConfig) -> Result<Estimate, GreenError> {
    let k = Kernel::new(z);
    let mut buf = vec![0.0; k.nmax + 1];
    let u_max = (4.0 * k.x_tail).sqrt();
    let c = 2.0 / PI.sqrt();
    let (body, qerr) = integrate_panels(u_max, cfg, |u| c * k.density(u * u, &mut buf))?;
    let (tail, tail_err) = k.tail(1.5);
    let s = 1.0 / (2.0 * PI.powf(2.5));
    let err = qerr + tail_err * s;
    check(err, cfg)?;
    Ok(Estimate::new(body + tail * s, err))
}

fn check(err: f64, cfg: &FourierConfig) -> Result<(), GreenError> {
    if err > cfg.quad_tol {
        Err(GreenError::Quadrature {
            delta: err,
            tol: cfg.quad_tol,
        })
    } else {
        Ok(())
    }
}

/// Two-term far-field expansion of G_D:
/// 2/(π²|x|²) + (4Σx_i⁴/|x|⁴ - 2)/(π²|x|⁴).
pub fn green_d_far(z: LatticePoint) -> f64 {
    let r2 = z.norm2_sq() as f64;
    let s4: f64 = z.0.iter().map(|&c| (c as f64).powi(4)).sum();
    let pi2 = PI * PI;
    2.0 / (pi2 * r2) + (4.0 * s4 / (r2 * r2) - 2.0) / (pi2 * r2 * r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_value() {
        let g = green_d(LatticePoint::ORIGIN, &FourierConfig::default()).unwrap();
        assert!((g.value - 1.239_467_1).abs() < 1e-7, "{}", g.value);
        assert!(g.err < 1e-9);
    }

    #[test]
    fn neighbour_relation() {
        // G_D(0) = 1 + G_D(e1) (first step decomposition)
        let cfg = FourierConfig::default();
        let g0 = green_d(LatticePoint::ORIGIN, &cfg).unwrap().value;
        let g1 = green_d(LatticePoint::unit(0), &cfg).unwrap().value;
        assert!((g0 - 1.0 - g1).abs() < 1e-10);
    }

    #[test]
    fn harmonic_off_origin() {
        let cfg = FourierConfig::default();
        let z = LatticePoint::new(2, 1, 0, 3);
        let g = green_d(z, &cfg).unwrap().value;
        let avg: f64 = (0..8u8)
            .map(|c| green_d(z.step(c), &cfg).unwrap().value)
            .sum::<f64>()
            / 8.0;
        assert!((g - avg).abs() < 1e-10);
    }
}
