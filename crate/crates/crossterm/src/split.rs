use crate::terms::Equilibrium;
use crate::CrossTermError;
use capacity::pairwise_sum;
use lattice_green::quad::GaussLegendre;
use lattice_green::table::C_SQRT_LATTICE;
use lattice_green::{GreenTable, LatticePoint};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use walk_sim::PointSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    /// The a-box is the bounding box of A ∪ B widened by this much.
    pub margin: u32,
    /// Error if the tail bound exceeds this.
    pub max_tail_err: f64,
    pub solve_max_points: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            margin: 12,
            max_tail_err: f64::INFINITY,
            solve_max_points: 4000,
        }
    }
}

/// TL(A,B) = Σ_a f_A(a) f_B(a), f_C(a) = Σ_{y∈C} G̃_D(y - a) es_C(y).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitTl {
    pub box_sum: f64,
    /// Error of the box sum from G̃_D and es errors.
    pub box_err: f64,
    /// Monopole estimate of the sum outside the box.
    pub tail: f64,
    pub tail_err: f64,
    pub box_points: u64,
}

impl SplitTl {
    pub fn value(&self) -> f64 {
        self.box_sum + self.tail
    }

    pub fn err(&self) -> f64 {
        self.box_err + self.tail_err
    }
}

/// ½ ∫_{S³} max_i (θ_i / h_i)² dθ = ∫_{outside box} |x|⁻⁶ dx for the box Π[-h_i, h_i].
fn box_exterior_integral(h: [f64; 4]) -> f64 {
    let gl = GaussLegendre::new(64);
    let nodes: Vec<(f64, f64)> = gl.nodes.iter().copied().zip(gl.weights.iter().copied()).collect();
    let mut s = 0.0;
    for (xa, wa) in &nodes {
        let psi = 0.5 * PI * (xa + 1.0);
        for (xb, wb) in &nodes {
            let phi = 0.5 * PI * (xb + 1.0);
            for (xc, wc) in &nodes {
                let eta = PI * (xc + 1.0);
                let t = [
                    psi.cos(),
                    psi.sin() * phi.cos(),
                    psi.sin() * phi.sin() * eta.cos(),
                    psi.sin() * phi.sin() * eta.sin(),
                ];
                let m = (0..4).map(|i| (t[i] / h[i]).powi(2)).fold(0.0, f64::max);
                let jac = psi.sin().powi(2) * phi.sin();
                s += wa * wb * wc * jac * m;
            }
        }
    }
    // dψ dφ dη = (π/2)(π/2)π per unit of the reference cube
    0.5 * s * 0.25 * PI * PI * PI
}

/// Split representation of TL over a finite a-box plus a far-field tail.
pub fn tl_split(
    a: &PointSet,
    b: &PointSet,
    table: &GreenTable,
    cfg: &SplitConfig,
) -> Result<SplitTl, CrossTermError> {
    if a.is_empty() || b.is_empty() {
        return Ok(SplitTl {
            box_sum: 0.0,
            box_err: 0.0,
            tail: 0.0,
            tail_err: 0.0,
            box_points: 0,
        });
    }
    if table.sqrt_radius().is_none() {
        return Err(CrossTermError::Parameter(
            "split representation needs a table with G̃_D entries".into(),
        ));
    }
    let solve = capacity::SolveConfig {
        max_points: cfg.solve_max_points,
    };
    let ea = Equilibrium::new(a, table, &solve)?;
    let eb = Equilibrium::new(b, table, &solve)?;
    let u = a.union(b);
    let mut lo = [i32::MAX; 4];
    let mut hi = [i32::MIN; 4];
    for p in u.iter() {
        for i in 0..4 {
            lo[i] = lo[i].min(p.0[i]);
            hi[i] = hi[i].max(p.0[i]);
        }
    }
    let m = cfg.margin as i32;
    for i in 0..4 {
        lo[i] -= m;
        hi[i] += m;
    }

    let field = |set: &Equilibrium, x: LatticePoint| -> Result<(f64, f64), CrossTermError> {
        let mut v = 0.0;
        let mut e = 0.0;
        for (y, es) in set.set.iter().zip(&set.es) {
            let g = table.gsqrt(*y - x)?;
            v += g.value * es;
            e += g.err * es + g.value * set.tol;
        }
        Ok((v, e))
    };

    let slabs: Vec<i32> = (lo[0]..=hi[0]).collect();
    let parts = slabs
        .par_iter()
        .map(|&x0| {
            let mut vals = Vec::new();
            let mut err = 0.0;
            for x1 in lo[1]..=hi[1] {
                for x2 in lo[2]..=hi[2] {
                    for x3 in lo[3]..=hi[3] {
                        let x = LatticePoint([x0, x1, x2, x3]);
                        let (fa, ea_) = field(&ea, x)?;
                        let (fb, eb_) = field(&eb, x)?;
                        vals.push(fa * fb);
                        err += ea_ * fb + fa * eb_ + ea_ * eb_;
                    }
                }
            }
            Ok((pairwise_sum(&vals), err))
        })
        .collect::<Result<Vec<(f64, f64)>, CrossTermError>>()?;
    let box_sum = pairwise_sum(&parts.iter().map(|p| p.0).collect::<Vec<_>>());
    let box_err: f64 = parts.iter().map(|p| p.1).sum();

    // far field: f_C(a) ≈ Cap(C) c_D / |a - c|³ about the box centre c
    let c: Vec<f64> = (0..4).map(|i| 0.5 * (lo[i] + hi[i]) as f64).collect();
    let h: [f64; 4] = std::array::from_fn(|i| 0.5 * (hi[i] - lo[i]) as f64 + 0.5);
    let rho = u
        .iter()
        .map(|p| (0..4).map(|i| (p.0[i] as f64 - c[i]).powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let l = h.iter().cloned().fold(f64::INFINITY, f64::min);
    let tail = ea.capacity * eb.capacity * C_SQRT_LATTICE * C_SQRT_LATTICE * box_exterior_integral(h);
    let tail_err = tail * (0.02 + 6.0 * (rho / l).powi(2) + 6.0 / (l * l))
        + (ea.cap_tol() * eb.capacity + eb.cap_tol() * ea.capacity) * tail;
    if tail_err > cfg.max_tail_err {
        return Err(CrossTermError::Truncation {
            bound: tail_err,
            tol: cfg.max_tail_err,
        });
    }
    let w = |i: usize| (hi[i] - lo[i] + 1) as u64;
    Ok(SplitTl {
        box_sum,
        box_err,
        tail,
        tail_err,
        box_points: w(0) * w(1) * w(2) * w(3),
    })
}
