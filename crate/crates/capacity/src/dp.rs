//! Time-domain oracle for G_A(a, b) from exact transition probabilities.
//!
//! With F_m(c) = P^a(first visit to A at a positive time happens at time m, at c),
//!   F_m(c) = p_m(c - a) - Σ_{j<m} Σ_{c'} F_j(c') p_{m-j}(c - c'),
//!   r_m    = p_m(b - a) - Σ_{j≤m} Σ_c F_j(c) p_{m-j}(b - c),
//! and G_A(a, b) = Σ_m r_m. The sum is truncated at M; beyond M the ratio
//! r_m / p_m(b - a) is extrapolated as κ + c₁/m + c₂/m² and integrated
//! against the exact remainder G_D(b - a) - Σ_{m≤M} p_m(b - a).

use crate::CapacityError;
use lattice_green::transition::PlaneCache;
use lattice_green::{GreenTable, LatticePoint, TransitionEngine};
use std::collections::HashMap;
use walk_sim::PointSet;

#[derive(Debug, Clone, Copy)]
pub struct DpConfig {
    pub steps: usize,
}

impl Default for DpConfig {
    fn default() -> Self {
        Self { steps: 4096 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DpResult {
    /// Σ_{m≤M} r_m.
    pub truncated: f64,
    /// Extrapolated Σ_{m>M} r_m.
    pub tail: f64,
    /// Twice the gap between two- and three-term extrapolations, plus rounding.
    pub tail_err: f64,
    /// Exact remainder Σ_{m>M} p_m(b - a), an upper bound on the tail.
    pub free_tail: f64,
}

impl DpResult {
    pub fn value(&self) -> f64 {
        self.truncated + self.tail
    }
}

struct SeriesCache<'a> {
    engine: &'a TransitionEngine,
    steps: usize,
    planes: PlaneCache,
    rows: HashMap<[u32; 4], Vec<f64>>,
}

impl SeriesCache<'_> {
    fn get(&mut self, z: LatticePoint) -> Result<&Vec<f64>, CapacityError> {
        let key = z.canonical();
        if !self.rows.contains_key(&key) {
            let s = self.engine.series_cached(z, self.steps, &mut self.planes)?;
            self.rows.insert(key, s);
        }
        Ok(&self.rows[&key])
    }
}

/// Reverse dot product Σ_{j=lo}^{hi} f[j] p[m - j].
#[inline]
fn conv(f: &[f64], p: &[f64], m: usize, lo: usize, hi: usize) -> f64 {
    let mut s = 0.0;
    for j in lo..=hi {
        s += f[j] * p[m - j];
    }
    s
}

pub fn restricted_green_dp(
    set: &PointSet,
    a: LatticePoint,
    b: LatticePoint,
    cfg: &DpConfig,
    engine: &TransitionEngine,
    table: &GreenTable,
) -> Result<DpResult, CapacityError> {
    let m_max = cfg.steps;
    if m_max < 64 {
        return Err(CapacityError::Parameter("DP needs at least 64 steps".into()));
    }
    let mut cache = SeriesCache {
        engine,
        steps: m_max,
        planes: PlaneCache::default(),
        rows: HashMap::new(),
    };
    let pts = set.points();
    let n = pts.len();
    let p_ba = cache.get(b - a)?.clone();
    let p_ca: Vec<Vec<f64>> = pts
        .iter()
        .map(|c| cache.get(*c - a).cloned())
        .collect::<Result<_, _>>()?;
    let p_cc: Vec<Vec<Vec<f64>>> = pts
        .iter()
        .map(|c| {
            pts.iter()
                .map(|d| cache.get(*c - *d).cloned())
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let p_bc: Vec<Vec<f64>> = pts
        .iter()
        .map(|c| cache.get(b - *c).cloned())
        .collect::<Result<_, _>>()?;

    let mut f = vec![vec![0.0; m_max + 1]; n];
    for m in 1..=m_max {
        for ci in 0..n {
            let mut v = p_ca[ci][m];
            if m > 1 {
                for cj in 0..n {
                    v -= conv(&f[cj], &p_cc[ci][cj], m, 1, m - 1);
                }
            }
            f[ci][m] = v;
        }
    }
    let mut r = vec![0.0; m_max + 1];
    for m in 0..=m_max {
        let mut v = p_ba[m];
        if m >= 1 {
            for ci in 0..n {
                v -= conv(&f[ci], &p_bc[ci], m, 1, m);
            }
        }
        r[m] = v;
    }
    let truncated: f64 = r.iter().sum();

    let gd = table.gd(b - a)?;
    let free_tail = gd.value - p_ba.iter().sum::<f64>();

    // fit points with the right parity
    let parity = ((b - a).norm1() & 1) as usize;
    let align = |m: usize| if m % 2 == parity { m } else { m - 1 };
    let ms = [align(m_max), align(m_max / 2), align(m_max / 4)];
    let kappa: Vec<f64> = ms.iter().map(|&m| r[m] / p_ba[m]).collect();
    let x: Vec<f64> = ms.iter().map(|&m| 1.0 / m as f64).collect();
    // three-term fit through all points, two-term through the largest two
    let (k3, c13, c23) = quadratic_through(&x, &kappa);
    let c12 = (kappa[0] - kappa[1]) / (x[0] - x[1]);
    let k2 = kappa[0] - c12 * x[0];
    let (s2, s3, s4) = power_tails(m_max, parity);
    let tail3 = free_tail * (k3 + c13 * s3 / s2 + c23 * s4 / s2);
    let tail2 = free_tail * (k2 + c12 * s3 / s2);
    // the two fits bracket the truth only loosely; double the gap
    let tail_err = 2.0 * (tail3 - tail2).abs() + gd.err + 1e-15 * m_max as f64;
    Ok(DpResult {
        truncated,
        tail: tail3,
        tail_err,
        free_tail,
    })
}

fn quadratic_through(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    // Newton divided differences, converted to monomial coefficients
    let d01 = (y[1] - y[0]) / (x[1] - x[0]);
    let d12 = (y[2] - y[1]) / (x[2] - x[1]);
    let d012 = (d12 - d01) / (x[2] - x[0]);
    let c2 = d012;
    let c1 = d01 - d012 * (x[0] + x[1]);
    let c0 = y[0] - d01 * x[0] + d012 * x[0] * x[1];
    (c0, c1, c2)
}

/// Σ_{m>M, m≡parity} m^{-2}, m^{-3}, m^{-4}.
fn power_tails(m_max: usize, parity: usize) -> (f64, f64, f64) {
    let mut m = m_max + 1;
    if m % 2 != parity {
        m += 1;
    }
    let end = 64 * m_max;
    let (mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0);
    while m <= end {
        let x = 1.0 / m as f64;
        s2 += x * x;
        s3 += x * x * x;
        s4 += x * x * x * x;
        m += 2;
    }
    let e = end as f64;
    // remainder of step-2 sums ≈ ½∫
    s2 += 0.5 / e;
    s3 += 0.25 / (e * e);
    s4 += 1.0 / (6.0 * e * e * e);
    (s2, s3, s4)
}
