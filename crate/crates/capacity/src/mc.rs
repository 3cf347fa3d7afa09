//! Monte Carlo escape estimates.

use crate::CapacityError;
use lattice_green::LatticePoint;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use walk_sim::{PointSet, StepStream};

/// Upper envelope of G_D at Euclidean distance ≥ r (r ≥ 2).
pub fn green_envelope(r: f64) -> f64 {
    let r2 = r * r;
    2.0 / (PI * PI * r2) * (1.0 + 1.0 / r2) + 2.0 / (r2 * r2 * r2)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct McEscapeConfig {
    pub samples: u64,
    /// Walks farther than this from every point of A count as escaped.
    pub escape_radius: f64,
    /// Walks still undecided after this many steps count as escaped.
    pub max_len: u64,
    pub seed: u64,
    pub stream_base: u64,
    pub batch: u64,
    pub workers: usize,
}

impl McEscapeConfig {
    /// R = max(10·diam(A), 20), L = 50 R².
    pub fn for_set(a: &PointSet, samples: u64, seed: u64) -> Self {
        let r = (10.0 * a.diameter()).max(20.0);
        Self {
            samples,
            escape_radius: r,
            max_len: (50.0 * r * r) as u64,
            seed,
            stream_base: 0,
            batch: 4096,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct McEscape {
    pub samples: u64,
    pub escaped: u64,
    pub captured: u64,
    pub undecided: u64,
    /// Fraction counted as escaped (undecided included).
    pub estimate: f64,
    pub std_err: f64,
    /// One-sided: the estimate exceeds the truth by at most this much in expectation.
    pub bias_bound: f64,
}

/// Membership test with a bounding-box prefilter and a coarse occupancy bitmap.
pub struct Target {
    set: FxHashSet<LatticePoint>,
    lo: [i32; 4],
    hi: [i32; 4],
    shift: u32,
    dims: [usize; 4],
    cells: Vec<u64>,
    center: LatticePoint,
    radius: f64,
}

const MAX_CELLS: usize = 1 << 26;

impl Target {
    pub fn new(a: &PointSet) -> Self {
        Self::from_points(a.points())
    }

    /// Duplicates are allowed.
    pub fn from_points(a: &[LatticePoint]) -> Self {
        let mut lo = [i32::MAX; 4];
        let mut hi = [i32::MIN; 4];
        for p in a {
            for i in 0..4 {
                lo[i] = lo[i].min(p.0[i]);
                hi[i] = hi[i].max(p.0[i]);
            }
        }
        if a.is_empty() {
            lo = [0; 4];
            hi = [-1; 4];
        }
        let mut shift = 2;
        let dims = loop {
            let d = std::array::from_fn(|i| ((hi[i] - lo[i]).max(0) as usize >> shift) + 1);
            if d.iter().product::<usize>() <= MAX_CELLS {
                break d;
            }
            shift += 1;
        };
        let mut t = Self {
            set: a.iter().copied().collect(),
            lo,
            hi,
            shift,
            dims,
            cells: vec![0; dims.iter().product::<usize>().div_ceil(64)],
            center: LatticePoint::ORIGIN,
            radius: 0.0,
        };
        for p in a {
            let c = t.cell(p);
            t.cells[c >> 6] |= 1 << (c & 63);
        }
        if !a.is_empty() {
            // centre of the bounding box
            t.center = LatticePoint(std::array::from_fn(|i| {
                ((lo[i] as i64 + hi[i] as i64).div_euclid(2)) as i32
            }));
            let r2 = a.iter().map(|p| (*p - t.center).norm2_sq()).max().unwrap();
            t.radius = (r2 as f64).sqrt();
        }
        t
    }

    #[inline]
    fn cell(&self, w: &LatticePoint) -> usize {
        let mut c = 0;
        for i in (0..4).rev() {
            c = c * self.dims[i] + ((w.0[i] - self.lo[i]) as usize >> self.shift);
        }
        c
    }

    #[inline]
    fn in_box(&self, w: &LatticePoint) -> bool {
        (0..4).all(|i| w.0[i] >= self.lo[i] && w.0[i] <= self.hi[i])
    }

    /// ℓ¹ distance from w to the bounding box.
    #[inline]
    fn box_distance(&self, w: &LatticePoint) -> i64 {
        (0..4)
            .map(|i| (self.lo[i] - w.0[i]).max(w.0[i] - self.hi[i]).max(0) as i64)
            .sum()
    }

    #[inline]
    pub fn contains(&self, w: &LatticePoint) -> bool {
        if !self.in_box(w) {
            return false;
        }
        let c = self.cell(w);
        self.cells[c >> 6] >> (c & 63) & 1 == 1 && self.set.contains(w)
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fate {
    Escaped,
    Captured,
    Undecided,
}

/// Shortest jump worth sampling in one go.
const MIN_JUMP: i64 = 24;

/// Exact displacement of a k-step walk. The steps split binomially between
/// the axis pairs (0,1) and (2,3); within a pair, x+y and x-y are independent
/// ±1 walks.
fn jump(k: u64, s: &mut StepStream) -> LatticePoint {
    let half = |n: u64, s: &mut StepStream| -> i64 {
        if n == 0 {
            0
        } else {
            2 * Binomial::new(n, 0.5).expect("valid binomial").sample(s) as i64 - n as i64
        }
    };
    let m = (half(k, s) + k as i64) / 2;
    let mut d = [0i32; 4];
    for (pair, n) in [(0, m as u64), (2, k - m as u64)] {
        let a = half(n, s);
        let b = half(n, s);
        d[pair] = ((a + b) / 2) as i32;
        d[pair + 1] = ((a - b) / 2) as i32;
    }
    LatticePoint(d)
}

/// Runs one walk from y until it hits the target at a positive time, leaves
/// the ball of radius ρ_A + R about the target centre, or exhausts L steps.
/// Far from the target the walk advances by exact multi-step jumps that
/// cannot reach it, so the exit position is checked at jump ends only.
#[inline]
pub fn run_walk(t: &Target, y: LatticePoint, r: f64, max_len: u64, s: &mut StepStream) -> Fate {
    let out = t.radius + r;
    let out2 = (out * out).ceil() as i64;
    let mut w = y;
    let mut n = 0u64;
    while n < max_len {
        if t.in_box(&w) {
            w = w.step(s.next_code());
            n += 1;
            if t.contains(&w) {
                return Fate::Captured;
            }
            continue;
        }
        let d2 = (w - t.center).norm2_sq();
        if d2 >= out2 {
            return Fate::Escaped;
        }
        // ‖x - c‖₁ ≤ 2‖x - c‖₂ in four dimensions
        let ball = ((d2 as f64).sqrt() - t.radius).floor() as i64;
        let ball1 = (w - t.center).norm1() - (2.0 * t.radius).ceil() as i64;
        let k = t.box_distance(&w).max(ball).max(ball1) - 1;
        if k >= MIN_JUMP {
            let k = (k as u64).min(max_len - n);
            w = w + jump(k, s);
            n += k;
        } else {
            w = w.step(s.next_code());
            n += 1;
            if t.contains(&w) {
                return Fate::Captured;
            }
        }
    }
    if (w - t.center).norm2_sq() >= out2 {
        return Fate::Escaped;
    }
    Fate::Undecided
}

fn run_batches<F, T>(n_batches: u64, workers: usize, f: F) -> Vec<T>
where
    F: Fn(u64) -> T + Sync + Send,
    T: Send,
{
    if workers <= 1 {
        return (0..n_batches).map(f).collect();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool")
        .install(|| (0..n_batches).into_par_iter().map(f).collect())
}

/// Fraction of walks from y that escape A. A walk started in A is not counted
/// as captured at time 0.
pub fn mc_escape(
    a: &PointSet,
    y: LatticePoint,
    cfg: &McEscapeConfig,
) -> Result<McEscape, CapacityError> {
    if a.is_empty() {
        return Ok(McEscape {
            samples: cfg.samples,
            escaped: cfg.samples,
            captured: 0,
            undecided: 0,
            estimate: 1.0,
            std_err: 0.0,
            bias_bound: 0.0,
        });
    }
    if cfg.escape_radius <= a.diameter() || cfg.escape_radius < 2.0 {
        return Err(CapacityError::Parameter(format!(
            "escape radius {} must exceed the set diameter {}",
            cfg.escape_radius,
            a.diameter()
        )));
    }
    if cfg.samples == 0 || cfg.batch == 0 {
        return Err(CapacityError::Parameter("samples and batch must be positive".into()));
    }
    let t = Target::new(a);
    let n_batches = cfg.samples.div_ceil(cfg.batch);
    let counts = run_batches(n_batches, cfg.workers, |b| {
        let mut s = StepStream::new(cfg.seed, cfg.stream_base + b);
        let m = cfg.batch.min(cfg.samples - b * cfg.batch);
        let mut c = [0u64; 3];
        for _ in 0..m {
            match run_walk(&t, y, cfg.escape_radius, cfg.max_len, &mut s) {
                Fate::Escaped => c[0] += 1,
                Fate::Captured => c[1] += 1,
                Fate::Undecided => c[2] += 1,
            }
        }
        c
    });
    let mut c = [0u64; 3];
    for x in counts {
        for i in 0..3 {
            c[i] += x[i];
        }
    }
    let m = cfg.samples as f64;
    let p = (c[0] + c[2]) as f64 / m;
    let std_err = if cfg.samples > 1 {
        (p * (1.0 - p) / (m - 1.0)).sqrt()
    } else {
        0.0
    };
    // P^z(hit A) = Σ_c G_D(z - c) es(c) ≤ Cap(A) max_c G_D(z - c) ≤ |A| envelope(R)
    let bias_bound = a.len() as f64 * green_envelope(cfg.escape_radius) + c[2] as f64 / m;
    Ok(McEscape {
        samples: cfg.samples,
        escaped: c[0],
        captured: c[1],
        undecided: c[2],
        estimate: p,
        std_err,
        bias_bound,
    })
}

/// Stratified estimate of Cap(A) = Σ_{x∈A} es(x).
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct McCapacity {
    pub estimate: f64,
    pub std_err: f64,
    /// Upper bound on the expected overestimate.
    pub bias_bound: f64,
    pub size: usize,
    pub strata: usize,
    pub undecided: u64,
}

/// Splits the points (in the given order, e.g. visiting order of a walk range)
/// into `strata` equal blocks, draws one point per block and one escape walk
/// per draw; Cap ≈ |A| × mean indicator. `cap_bound` bounds Cap(A) in the
/// bias term; without it the estimate plus three standard errors is used.
pub fn mc_capacity(
    ordered: &[LatticePoint],
    strata: usize,
    escape_radius: f64,
    max_len: u64,
    cap_bound: Option<f64>,
    s: &mut StepStream,
) -> Result<McCapacity, CapacityError> {
    let t = Target::from_points(ordered);
    if t.len() != ordered.len() {
        return Err(CapacityError::Parameter("points must be distinct".into()));
    }
    mc_capacity_in(&t, ordered, strata, escape_radius, max_len, cap_bound, s)
}

/// As [`mc_capacity`] with a prebuilt target holding exactly `ordered`.
pub fn mc_capacity_in(
    t: &Target,
    ordered: &[LatticePoint],
    strata: usize,
    escape_radius: f64,
    max_len: u64,
    cap_bound: Option<f64>,
    s: &mut StepStream,
) -> Result<McCapacity, CapacityError> {
    if strata == 0 || strata > ordered.len() {
        return Err(CapacityError::Parameter("strata must be in 1..=|A|".into()));
    }
    if escape_radius < 2.0 {
        return Err(CapacityError::Parameter("escape radius must be at least 2".into()));
    }
    let n = ordered.len();
    let mut hits = Vec::with_capacity(strata);
    let mut undecided = 0;
    for k in 0..strata {
        let lo = k * n / strata;
        let hi = (k + 1) * n / strata;
        let i = lo + s.below((hi - lo) as u64) as usize;
        let w = (hi - lo) as f64;
        let fate = run_walk(t, ordered[i], escape_radius, max_len, s);
        if fate == Fate::Undecided {
            undecided += 1;
        }
        hits.push((w, if fate == Fate::Captured { 0.0 } else { 1.0 }));
    }
    let estimate: f64 = hits.iter().map(|(w, h)| w * h).sum();
    // between-stratum variance as a conservative plug-in
    let mean = estimate / n as f64;
    let var: f64 = hits.iter().map(|(w, h)| w * w * (h - mean).powi(2)).sum();
    let std_err = var.sqrt();
    let cap = cap_bound.unwrap_or(estimate + 3.0 * std_err);
    // a walk counted as escaped returns with probability ≤ Cap(A)·envelope(R)
    Ok(McCapacity {
        estimate,
        std_err,
        bias_bound: estimate * cap * green_envelope(escape_radius)
            + n as f64 * undecided as f64 / strata as f64,
        size: n,
        strata,
        undecided,
    })
}
