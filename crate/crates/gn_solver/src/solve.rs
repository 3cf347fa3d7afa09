use crate::energy::Forms;
use crate::{energies, gn_ratio, Energies, GnError, RadialProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnConfig {
    /// Solved in order; each level starts from the previous optimum.
    pub grids: Vec<usize>,
    pub r_min: f64,
    pub r_max: f64,
    pub max_iter: usize,
    /// Stop when one step improves log R by less than this.
    pub tol: f64,
    pub starts: usize,
    pub seed: u64,
    pub workers: usize,
}

impl Default for GnConfig {
    fn default() -> Self {
        Self {
            grids: vec![100, 200, 400],
            r_min: 1e-3,
            r_max: 1e2,
            max_iter: 20_000,
            tol: 1e-14,
            starts: 6,
            seed: 0,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnResult {
    pub kappa: f64,
    pub profile: RadialProfile,
    pub energies: Energies,
    /// (grid size, κ̃) for accepted refinements; nondecreasing.
    pub refinement_history: Vec<(usize, f64)>,
    /// (grid size, κ̃) for every level solved.
    pub levels: Vec<(usize, f64)>,
    pub iterations: usize,
    pub converged: bool,
}

impl GnResult {
    pub fn kappa_at(&self, grid: usize) -> Option<f64> {
        self.levels.iter().find(|l| l.0 == grid).map(|l| l.1)
    }
}

struct Ascent {
    profile: RadialProfile,
    log_ratio: f64,
    iterations: usize,
    converged: bool,
}

/// Solves the tridiagonal system (A/D + W/N) x = g on the free nodes.
fn precondition(forms: &Forms, d: f64, nn: f64, g: &[f64]) -> Vec<f64> {
    let m = g.len() - 1;
    let diag: Vec<f64> = (0..m)
        .map(|i| {
            let left = if i > 0 { forms.c[i - 1] } else { 0.0 };
            (left + forms.c[i]) / d + forms.w[i] / nn
        })
        .collect();
    let off: Vec<f64> = (0..m.saturating_sub(1)).map(|i| -forms.c[i] / d).collect();
    let mut cp = vec![0.0; m];
    let mut dp = vec![0.0; m];
    for i in 0..m {
        let a = if i > 0 { off[i - 1] } else { 0.0 };
        let denom = diag[i] - a * if i > 0 { cp[i - 1] } else { 0.0 };
        cp[i] = if i + 1 < m { off[i] / denom } else { 0.0 };
        dp[i] = (g[i] - a * if i > 0 { dp[i - 1] } else { 0.0 }) / denom;
    }
    let mut x = vec![0.0; m + 1];
    for i in (0..m).rev() {
        x[i] = dp[i] - cp[i] * if i + 1 < m { x[i + 1] } else { 0.0 };
    }
    x
}

fn normalize(forms: &Forms, f: &mut [f64]) {
    let s = forms.norm(f).sqrt();
    f.iter_mut().for_each(|v| *v /= s);
}

fn log_ratio(q: f64, nn: f64, d: f64) -> f64 {
    0.25 * (q.ln() - nn.ln() - d.ln())
}

/// Preconditioned ascent on log R with backtracking; a unit step of 2 is the
/// self-consistent-field update for the Euler-Lagrange equation.
fn ascend(start: RadialProfile, max_iter: usize, tol: f64) -> Ascent {
    let forms = Forms::new(&start.radii);
    let mut f = start.values;
    normalize(&forms, &mut f);
    let (q, mut nn, mut d, mut g) = forms.log_ratio_gradient(&f);
    let mut lr = log_ratio(q, nn, d);
    let mut tau = 2.0;
    let mut converged = false;
    let mut it = 0;
    while it < max_iter {
        it += 1;
        let dir = precondition(&forms, d, nn, &g);
        let mut accepted = None;
        let mut t = tau;
        for _ in 0..60 {
            let mut trial: Vec<f64> = f.iter().zip(&dir).map(|(a, b)| a + t * b).collect();
            normalize(&forms, &mut trial);
            let (q2, n2, d2, g2) = forms.log_ratio_gradient(&trial);
            let lr2 = log_ratio(q2, n2, d2);
            if lr2.is_finite() && lr2 >= lr {
                accepted = Some((trial, n2, d2, g2, lr2));
                break;
            }
            t *= 0.5;
        }
        let Some((trial, n2, d2, g2, lr2)) = accepted else {
            converged = true;
            break;
        };
        let gain = lr2 - lr;
        f = trial;
        (nn, d, g, lr) = (n2, d2, g2, lr2);
        tau = (2.0 * t).min(4.0);
        if gain < tol {
            converged = true;
            break;
        }
    }
    Ascent {
        profile: RadialProfile {
            radii: start.radii,
            values: f,
        },
        log_ratio: lr,
        iterations: it,
        converged,
    }
}

fn start_profile(radii: &[f64], k: usize, seed: u64) -> RadialProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    let width = 0.5 * 2f64.powf((k / 3) as f64 * 0.5) * (1.0 + 0.2 * rng.gen::<f64>());
    let family = k % 3;
    let mut p = RadialProfile::from_fn(radii.to_vec(), |r| {
        let x = r / width;
        match family {
            0 => (-x * x).exp(),
            1 => (1.0 + x * x).powi(-2),
            _ => 1.0 / x.cosh(),
        }
    })
    .expect("valid start");
    for v in p.values.iter_mut().rev().skip(1) {
        *v *= 1.0 + 0.05 * (rng.gen::<f64>() - 0.5);
    }
    p
}

pub fn maximize_ratio(cfg: &GnConfig) -> Result<GnResult, GnError> {
    if cfg.grids.is_empty() || cfg.starts == 0 || !(cfg.tol > 0.0) {
        return Err(GnError::Config("need grids, starts ≥ 1 and tol > 0".into()));
    }
    let first = RadialProfile::log_grid(cfg.grids[0], cfg.r_min, cfg.r_max)?;
    let run = |k: usize| ascend(start_profile(&first, k, cfg.seed), cfg.max_iter, cfg.tol);
    let runs: Vec<Ascent> = if cfg.workers <= 1 {
        (0..cfg.starts).map(run).collect()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| GnError::Config(e.to_string()))?
            .install(|| (0..cfg.starts).into_par_iter().map(run).collect())
    };
    // max with lowest-index tie-break
    let mut best = runs
        .into_iter()
        .reduce(|a, b| if b.log_ratio > a.log_ratio { b } else { a })
        .unwrap();
    let mut iterations = best.iterations;
    let mut converged = best.converged;
    let mut levels = vec![(cfg.grids[0], best.log_ratio.exp())];
    let mut history = levels.clone();
    let mut accepted = best.profile.clone();
    for &n in &cfg.grids[1..] {
        let grid = RadialProfile::log_grid(n, cfg.r_min, cfg.r_max)?;
        let level = ascend(best.profile.resample(grid)?, cfg.max_iter, cfg.tol);
        iterations += level.iterations;
        converged &= level.converged;
        let kappa = level.log_ratio.exp();
        levels.push((n, kappa));
        if kappa >= history.last().unwrap().1 {
            history.push((n, kappa));
            accepted = level.profile.clone();
        }
        best = level;
    }
    let kappa = gn_ratio(&accepted)?;
    Ok(GnResult {
        kappa,
        energies: energies(&accepted),
        profile: accepted,
        refinement_history: history,
        levels,
        iterations,
        converged,
    })
}
