use crate::record::{Check, Experiment, ExperimentRecord, Row};
use crate::stats::{linear_fit, mean_se};
use crate::{stream, Lab, LabError};
use lattice_green::{GreenTable, LatticePoint};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use walk_sim::{sample_walk, StepStream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BridgeBound {
    pub n_list: Vec<usize>,
    /// Accepted bridges per n, and unconditioned walks per n.
    pub samples: usize,
    /// S_n must land within ball_fraction·√n of y.
    pub ball_fraction: f64,
    pub acceptance_floor: f64,
    pub seed: u64,
}

impl Default for BridgeBound {
    fn default() -> Self {
        Self {
            n_list: vec![1 << 8, 1 << 9, 1 << 10, 1 << 11, 1 << 12],
            samples: 200,
            ball_fraction: 0.5,
            acceptance_floor: 1e-4,
            seed: 0,
        }
    }
}

const BATCH: u64 = 256;

fn green_sum(steps: &[LatticePoint], z: LatticePoint, table: &GreenTable) -> Result<f64, LabError> {
    let mut s = 0.0;
    for p in steps {
        s += table.gd(*p - z)?.value;
    }
    Ok(s)
}

/// Lattice point near √(n/4)·(standard normal vector).
fn typical_point(n: usize, s: &mut StepStream) -> LatticePoint {
    let sd = (n as f64 / 4.0).sqrt();
    LatticePoint(std::array::from_fn(|_| {
        let g: f64 = s.sample(StandardNormal);
        (sd * g).round() as i32
    }))
}

/// E[Σ_{i=0}^n G_D(S_i − z) | S_n ∈ B(y, ball_fraction·√n)] by rejection, for
/// one typical pair (y, z) per n, next to the unconditioned E[Σ_{i=0}^n G_D(S_i)].
/// Both are fitted against log n.
pub fn bridge_bound_check(p: &BridgeBound, lab: &Lab) -> Result<ExperimentRecord, LabError> {
    if p.n_list.is_empty() || p.n_list.contains(&0) || p.n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::Parameter("n_list must be nonempty, ascending, n ≥ 1".into()));
    }
    if p.samples == 0 || !(p.ball_fraction > 0.0) || !(p.acceptance_floor > 0.0 && p.acceptance_floor <= 1.0) {
        return Err(LabError::Parameter(
            "samples ≥ 1, ball_fraction > 0 and acceptance_floor in (0,1] required".into(),
        ));
    }
    let mut rec = ExperimentRecord::new(Experiment::BridgeBound(p.clone()));
    let mut cond = Vec::new();
    let mut uncond = Vec::new();
    for (block, &n) in p.n_list.iter().enumerate() {
        let mut s = StepStream::new(p.seed, stream(block, 1 << 39));
        let y = typical_point(n, &mut s);
        let z = typical_point(n, &mut s);
        let rb = (p.ball_fraction * (n as f64).sqrt()).max(1.0);
        let rb2 = rb * rb;
        let max_trials = (p.samples as f64 / p.acceptance_floor).ceil() as u64;

        let mut accepted = Vec::with_capacity(p.samples);
        let mut trials = 0u64;
        while accepted.len() < p.samples && trials < max_trials {
            let end = (trials + BATCH).min(max_trials);
            let batch = lab.map(trials..end, |t| {
                let w = sample_walk(n, p.seed, stream(block, 2 * t));
                if ((w.steps[n] - y).norm2_sq() as f64) <= rb2 {
                    Some(green_sum(&w.steps, z, lab.table))
                } else {
                    None
                }
            });
            for r in batch {
                trials += 1;
                if let Some(v) = r {
                    accepted.push(v?);
                    if accepted.len() == p.samples {
                        break;
                    }
                }
            }
        }
        let rate = accepted.len() as f64 / trials as f64;
        if accepted.len() < p.samples || rate < p.acceptance_floor {
            return Err(LabError::BridgeAcceptance {
                n,
                rate,
                floor: p.acceptance_floor,
            });
        }

        let free: Vec<f64> = lab
            .map(0..p.samples as u64, |t| {
                let w = sample_walk(n, p.seed, stream(block, 2 * t + 1));
                green_sum(&w.steps, LatticePoint::ORIGIN, lab.table)
            })
            .into_iter()
            .collect::<Result<_, _>>()?;

        let (cm, cse) = mean_se(&accepted);
        let (um, use_) = mean_se(&free);
        rec.rows.push(
            Row::new(n as f64, cm, cse)
                .with("unconditioned", um)
                .with("unconditioned_err", use_)
                .with("acceptance_rate", rate)
                .with("trials", trials as f64)
                .with("y_norm", y.norm2())
                .with("z_norm", z.norm2())
                .with("ball_radius", rb),
        );
        cond.push((n, cm, cse));
        uncond.push((n, um, use_));
    }
    rec.put("reference_slope", 4.0 / (PI * PI));
    let lowest = cond
        .iter()
        .chain(&uncond)
        .map(|v| v.1)
        .fold(f64::INFINITY, f64::min);
    rec.checks.push(Check::at_least("nonnegative", lowest, 0.0));
    // largest conditional mean in units of log n
    let ratio = cond
        .iter()
        .filter(|v| v.0 > 1)
        .map(|v| v.1 / (v.0 as f64).ln())
        .fold(0.0, f64::max);
    rec.put("conditional_log_ratio", ratio);
    for (name, pts) in [("conditional", &cond), ("unconditioned", &uncond)] {
        let x: Vec<f64> = pts.iter().map(|v| (v.0 as f64).ln()).collect();
        let y: Vec<f64> = pts.iter().map(|v| v.1).collect();
        let e: Vec<f64> = pts.iter().map(|v| v.2).collect();
        let Some(f) = linear_fit(&x, &y, &e) else {
            continue;
        };
        rec.put(&format!("{name}_slope"), f.slope);
        rec.put(&format!("{name}_slope_err"), f.slope_err);
        rec.put(&format!("{name}_intercept"), f.intercept);
        rec.put(&format!("{name}_intercept_err"), f.intercept_err);
        if name == "unconditioned" {
            let slope = if f.slope.is_finite() { f.slope } else { 0.0 };
            rec.checks
                .push(Check::at_least("unconditioned_slope_positive", slope, f64::MIN_POSITIVE));
            // successive doublings should each add about c·log 2
            let mut worst: Option<f64> = None;
            for w in pts.windows(2).filter(|w| w[1].0 == 2 * w[0].0) {
                let d = w[1].1 - w[0].1 - f.slope * 2f64.ln();
                let sigma =
                    (w[0].2.powi(2) + w[1].2.powi(2) + (f.slope_err * 2f64.ln()).powi(2)).sqrt();
                let z = d.abs() / (3.0 * sigma);
                worst = Some(worst.map_or(z, |v: f64| v.max(z)));
            }
            if let Some(z) = worst {
                rec.checks.push(Check::at_most("doubling_increment", z, 1.0));
            }
        }
    }
    Ok(rec)
}
