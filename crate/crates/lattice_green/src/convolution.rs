//! Lattice self-convolution of G̃_D against G_D.

use crate::quad::GaussLegendre;
use crate::sqrt::LCLT_MARGIN;
use crate::table::C_SQRT_LATTICE;
use crate::{GreenError, GreenTable, LatticePoint};
use std::f64::consts::PI;

/// Relative uncertainty assigned to the continuum estimate of the far part.
pub const FAR_PART_REL_ERR: f64 = 0.1;

#[derive(Debug, Clone, Copy)]
pub struct ConvolutionCheck {
    pub z: LatticePoint,
    /// Σ over |x|_∞ ≤ R of G̃_D(x) G̃_D(z-x).
    pub box_sum: f64,
    /// Continuum estimate of the sum over |x|_∞ > R.
    pub far_part: f64,
    pub far_err: f64,
    /// Upper bound on G_D(z) - (G̃_D^{(K)} ⋆ G̃_D^{(K)})(z) ≥ 0.
    pub truncation_deficit: f64,
    pub gd: f64,
    pub gd_err: f64,
}

impl ConvolutionCheck {
    pub fn convolution(&self) -> f64 {
        self.box_sum + self.far_part
    }

    pub fn residual(&self) -> f64 {
        self.convolution() - self.gd
    }

    /// Combined bound the residual must respect.
    pub fn combined_tolerance(&self) -> f64 {
        self.far_err + self.truncation_deficit + self.gd_err + self.box_sum * 1e-12
    }

    pub fn within_tolerance(&self) -> bool {
        self.residual().abs() <= self.combined_tolerance()
    }
}

/// Σ_{k>K, k ≡ |z|₁ mod 2} of the envelope on p_k.
pub fn deficit_bound(k_cut: usize, parity: u8) -> f64 {
    let mut k = k_cut + 1;
    if k % 2 != parity as usize {
        k += 1;
    }
    let m0 = (k / 2) as f64;
    LCLT_MARGIN * 2.0 / (PI * PI) * (1.0 / (m0 - 1.0))
}

/// (G̃_D ⋆ G̃_D)(z) over the box |x|_∞ ≤ `radius`, plus the far part from
/// c_D² ∫_{|x|_∞ > radius+½} |x|^{-3}|z-x|^{-3} dx.
pub fn sqrt_convolution_check(
    table: &GreenTable,
    z: LatticePoint,
    radius: u32,
) -> Result<ConvolutionCheck, GreenError> {
    let need = radius as i64 + z.norm_inf();
    match table.sqrt_radius() {
        Some(rs) if rs as i64 >= need => {}
        _ => {
            return Err(GreenError::TableMiss(
                [need as i32, 0, 0, 0],
            ))
        }
    }
    let r = radius as i32;
    let mut box_sum = 0.0;
    for a in -r..=r {
        for b in -r..=r {
            for c in -r..=r {
                let mut row = 0.0;
                for d in -r..=r {
                    let x = LatticePoint([a, b, c, d]);
                    row += table.gsqrt_value(x)? * table.gsqrt_value(z - x)?;
                }
                box_sum += row;
            }
        }
    }
    let far = far_part(z, radius as f64 + 0.5);
    let gd = table.gd(z)?;
    Ok(ConvolutionCheck {
        z,
        box_sum,
        far_part: far,
        far_err: FAR_PART_REL_ERR * far,
        truncation_deficit: deficit_bound(table.config().series_cutoff_k, z.parity()),
        gd: gd.value,
        gd_err: gd.err,
    })
}

/// c_D² ∫_{|x|_∞ > h} |x|^{-3}|z-x|^{-3} dx by cubature over directions with
/// the radial integral in closed form.
pub fn far_part(z: LatticePoint, h: f64) -> f64 {
    let zc = z.to_continuum().0;
    let z2: f64 = zc.iter().map(|v| v * v).sum();
    let g = GaussLegendre::new(8);
    let panels = |lo: f64, hi: f64, n: usize| -> Vec<(f64, f64)> {
        let w = (hi - lo) / n as f64;
        let mut out = Vec::with_capacity(n * 8);
        for p in 0..n {
            let c = lo + (p as f64 + 0.5) * w;
            for (x, wt) in g.nodes.iter().zip(&g.weights) {
                out.push((c + 0.5 * w * x, 0.5 * w * wt));
            }
        }
        out
    };
    let psi = panels(0.0, PI, 8);
    let theta = panels(0.0, PI, 8);
    let phi = panels(0.0, 2.0 * PI, 16);
    let mut total = 0.0;
    for &(p, wp) in &psi {
        let (sp, cp) = p.sin_cos();
        for &(t, wt) in &theta {
            let (st, ct) = t.sin_cos();
            let base = wp * wt * sp * sp * st;
            for &(f, wf) in &phi {
                let (sf, cf) = f.sin_cos();
                let w = [cp, sp * ct, sp * st * cf, sp * st * sf];
                let m = w.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                let rc = h / m;
                let b: f64 = w.iter().zip(&zc).map(|(a, c)| a * c).sum();
                let d = (z2 - b * b).max(0.0);
                let u = rc - b;
                let s = (u * u + d).sqrt();
                total += base * wf / (s * (s + u));
            }
        }
    }
    C_SQRT_LATTICE * C_SQRT_LATTICE * total
}
