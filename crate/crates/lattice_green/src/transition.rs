//! Exact n-step transition probabilities p_k(z) of simple random walk on Z⁴.
//!
//! Each step moves along one of two coordinate pairs with probability ½, so
//! p_k(z) = Σ_j B(k,j) p²_j(z₁,z₂) p²_{k-j}(z₃,z₄) with B(k,j) = C(k,j)/2^k,
//! and the planar kernel splits again into one-dimensional walks:
//! p²_j(a,b) = Σ_i B(j,i) q_i(a) q_{j-i}(b), q_m(x) = C(m,(m+x)/2)/2^m.
//! Binomial weights outside k/2 ± 8√k are below e^{-128} and are skipped.

use crate::{GreenError, LatticePoint};
use std::collections::HashMap;
use std::f64::consts::LN_2;

/// Default largest step count served.
pub const DEFAULT_MAX_STEPS: usize = 10_000;
const WINDOW: f64 = 8.0;

#[derive(Debug, Clone)]
pub struct TransitionEngine {
    max_k: usize,
    ln_fact: Vec<f64>,
}

impl Default for TransitionEngine {
    fn default() -> Self {
        Self::new(DEFAULT_MAX_STEPS)
    }
}

impl TransitionEngine {
    pub fn new(max_k: usize) -> Self {
        let mut ln_fact = Vec::with_capacity(max_k + 2);
        ln_fact.push(0.0);
        let mut acc = 0.0f64;
        for i in 1..=max_k + 1 {
            acc += (i as f64).ln();
            ln_fact.push(acc);
        }
        Self { max_k, ln_fact }
    }

    pub fn max_steps(&self) -> usize {
        self.max_k
    }

    fn check(&self, k: usize) -> Result<(), GreenError> {
        if k > self.max_k {
            Err(GreenError::Resource { k, max: self.max_k })
        } else {
            Ok(())
        }
    }

    fn ln_binom_half(&self, k: usize, j: usize) -> f64 {
        self.ln_fact[k] - self.ln_fact[j] - self.ln_fact[k - j] - k as f64 * LN_2
    }

    /// q_m(x) for m = 0..=kmax.
    fn line(&self, x: u32, kmax: usize) -> Vec<f64> {
        let x = x as usize;
        let mut out = vec![0.0; kmax + 1];
        let mut m = x;
        while m <= kmax {
            out[m] = self.ln_binom_half(m, (m + x) / 2).exp();
            m += 2;
        }
        out
    }

    /// Σ_i B(k,i) u_i v_{k-i} over admissible i, for every k ≤ kmax.
    /// `pu`/`mu`: parity and minimal index of u's support (same for v).
    fn split(
        &self,
        u: &[f64],
        (pu, mu): (usize, usize),
        v: &[f64],
        (pv, mv): (usize, usize),
        kmax: usize,
    ) -> Vec<f64> {
        let mut out = vec![0.0; kmax + 1];
        let mut k = mu + mv;
        if (k + pu + pv) % 2 == 1 {
            k += 1;
        }
        while k <= kmax {
            let half = 0.5 * k as f64;
            let w = WINDOW * (k as f64).sqrt();
            let mut lo = mu.max((half - w).floor().max(0.0) as usize);
            let hi = (k - mv).min((half + w).ceil() as usize);
            if lo % 2 != pu {
                lo += 1;
            }
            if lo <= hi {
                let mut b = self.ln_binom_half(k, lo).exp();
                let mut s = 0.0;
                let mut i = lo;
                loop {
                    s += b * u[i] * v[k - i];
                    if i + 2 > hi {
                        break;
                    }
                    let (n, j) = (k as f64, i as f64);
                    b *= (n - j) * (n - j - 1.0) / ((j + 1.0) * (j + 2.0));
                    i += 2;
                }
                out[k] = s;
            }
            k += 2;
        }
        out
    }

    fn plane(&self, a: u32, b: u32, kmax: usize) -> Vec<f64> {
        let qa = self.line(a, kmax);
        let qb = self.line(b, kmax);
        self.split(
            &qa,
            ((a % 2) as usize, a as usize),
            &qb,
            ((b % 2) as usize, b as usize),
            kmax,
        )
    }

    /// p_k(z) for k = 0..=kmax.
    pub fn series(&self, z: LatticePoint, kmax: usize) -> Result<Vec<f64>, GreenError> {
        let mut cache = PlaneCache::default();
        self.series_cached(z, kmax, &mut cache)
    }

    /// As `series`, reusing planar kernels across calls with the same `kmax`.
    pub fn series_cached(
        &self,
        z: LatticePoint,
        kmax: usize,
        cache: &mut PlaneCache,
    ) -> Result<Vec<f64>, GreenError> {
        self.check(kmax)?;
        if cache.kmax != kmax {
            cache.rows.clear();
            cache.kmax = kmax;
        }
        let n = z.canonical();
        for &(a, b) in &[(n[0], n[1]), (n[2], n[3])] {
            cache
                .rows
                .entry((a, b))
                .or_insert_with(|| self.plane(a, b, kmax));
        }
        let u = &cache.rows[&(n[0], n[1])];
        let v = &cache.rows[&(n[2], n[3])];
        let s1 = (n[0] + n[1]) as usize;
        let s2 = (n[2] + n[3]) as usize;
        Ok(self.split(u, (s1 % 2, s1), v, (s2 % 2, s2), kmax))
    }

    /// Single value p_k(z).
    pub fn prob(&self, k: usize, z: LatticePoint) -> Result<f64, GreenError> {
        self.check(k)?;
        if z.norm1() > k as i64 || (z.norm1() as usize + k) % 2 == 1 {
            return Ok(0.0);
        }
        Ok(self.series(z, k)?[k])
    }
}

/// Planar kernel rows keyed by (|z_a|, |z_b|).
#[derive(Debug, Default)]
pub struct PlaneCache {
    kmax: usize,
    rows: HashMap<(u32, u32), Vec<f64>>,
}

/// p_k(z) with the default step limit.
pub fn transition_prob(k: usize, z: LatticePoint) -> Result<f64, GreenError> {
    TransitionEngine::default().prob(k, z)
}

/// Literal k-fold convolution of the step law on the box of radius k.
/// Returns a dense array indexed by `(z + k)` in row-major order.
pub fn convolution_box(k: usize) -> BoxDistribution {
    let r = k as i32;
    let side = (2 * r + 1) as usize;
    let mut cur = vec![0.0; side.pow(4)];
    let idx = |c: [i32; 4]| -> usize {
        c.iter()
            .fold(0usize, |acc, &x| acc * side + (x + r) as usize)
    };
    cur[idx([0; 4])] = 1.0;
    for step in 0..k {
        let s = step as i32;
        let mut next = vec![0.0; side.pow(4)];
        for a in -s..=s {
            for b in -s..=s {
                for c in -s..=s {
                    for d in -s..=s {
                        let p = cur[idx([a, b, c, d])];
                        if p == 0.0 {
                            continue;
                        }
                        let q = p / 8.0;
                        for e in crate::point::STEPS.iter() {
                            next[idx([a + e[0], b + e[1], c + e[2], d + e[3]])] += q;
                        }
                    }
                }
            }
        }
        cur = next;
    }
    BoxDistribution {
        radius: r,
        values: cur,
    }
}

#[derive(Debug, Clone)]
pub struct BoxDistribution {
    pub radius: i32,
    pub values: Vec<f64>,
}

impl BoxDistribution {
    pub fn get(&self, z: LatticePoint) -> f64 {
        let r = self.radius;
        if z.norm_inf() > r as i64 {
            return 0.0;
        }
        let side = (2 * r + 1) as usize;
        let i = z.0.iter().fold(0usize, |acc, &x| acc * side + (x + r) as usize);
        self.values[i]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn points(&self) -> impl Iterator<Item = LatticePoint> + '_ {
        let r = self.radius;
        (-r..=r).flat_map(move |a| {
            (-r..=r).flat_map(move |b| {
                (-r..=r).flat_map(move |c| (-r..=r).map(move |d| LatticePoint([a, b, c, d])))
            })
        })
    }
}
