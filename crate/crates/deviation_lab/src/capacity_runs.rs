use crate::record::{Check, Experiment, ExperimentRecord, Row};
use crate::stats::{linear_fit, mean_se};
use crate::{stream, BRule, Lab, LabError};
use capacity::{green_envelope, mc_capacity_in, run_walk, Fate, Target};
use gn_solver::{deviation_constants, maximize_ratio, GnConfig};
use lattice_green::LatticePoint;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use walk_sim::{sample_walk, StepStream};

/// Parameters shared by the capacity and non-intersection curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapacityCurve {
    pub n_list: Vec<usize>,
    /// Independent walks per n.
    pub samples: usize,
    /// Escape walks per range, one per stratum of the visiting order.
    pub strata: usize,
    /// Escape radius R = max(factor·√n, 20).
    pub escape_factor: f64,
    pub seed: u64,
}

impl Default for CapacityCurve {
    fn default() -> Self {
        Self {
            n_list: vec![1 << 10, 1 << 12, 1 << 14],
            samples: 100,
            strata: 64,
            escape_factor: 2.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LowerTail {
    pub n: usize,
    pub lambda_grid: Vec<f64>,
    pub b_rule: BRule,
    /// Initial number of walks; doubled while the largest λ has fewer than
    /// ten tail events, up to `max_samples`.
    pub samples: usize,
    pub max_samples: usize,
    pub strata: usize,
    pub escape_factor: f64,
    pub seed: u64,
    /// κ̃ for the reference rate I₄(λ); solved for when absent.
    pub kappa: Option<f64>,
}

impl Default for LowerTail {
    fn default() -> Self {
        Self {
            n: 1 << 12,
            lambda_grid: vec![0.5, 1.0, 1.5, 2.0, 2.5],
            b_rule: BRule::LogLog,
            samples: 1000,
            max_samples: 4000,
            strata: 32,
            escape_factor: 7.0,
            seed: 0,
            kappa: None,
        }
    }
}

/// Escape radius used for walks of length n.
pub fn escape_radius(n: usize, factor: f64) -> f64 {
    (factor * (n as f64).sqrt()).max(20.0)
}

fn max_len(r: f64) -> u64 {
    (1e4 * r * r).min(1e15) as u64
}

fn validate_curve(p: &CapacityCurve) -> Result<(), LabError> {
    if p.n_list.is_empty() || p.n_list.contains(&0) {
        return Err(LabError::Parameter("n_list must be nonempty with n ≥ 1".into()));
    }
    if p.n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::Parameter("n_list must be strictly ascending".into()));
    }
    if p.samples == 0 || p.strata == 0 || !(p.escape_factor > 0.0) {
        return Err(LabError::Parameter(
            "samples, strata and escape_factor must be positive".into(),
        ));
    }
    Ok(())
}

/// Distinct points of S[1,n] in order of first visit.
fn first_visits(steps: &[LatticePoint]) -> Vec<LatticePoint> {
    let mut seen = FxHashSet::default();
    steps[1..].iter().copied().filter(|p| seen.insert(*p)).collect()
}

/// One walk's stratified capacity estimate and its undecided-walk bias.
fn capacity_sample(
    n: usize,
    seed: u64,
    block: usize,
    j: u64,
    strata: usize,
    r: f64,
) -> Result<(f64, f64), LabError> {
    let w = sample_walk(n, seed, stream(block, 2 * j));
    let ordered = first_visits(&w.steps);
    let t = Target::from_points(&ordered);
    let mut s = StepStream::new(seed, stream(block, 2 * j + 1));
    let c = mc_capacity_in(&t, &ordered, strata.min(ordered.len()), r, max_len(r), None, &mut s)?;
    Ok((c.estimate, c.size as f64 * c.undecided as f64 / c.strata as f64))
}

/// Mean over stratified walk indices i of P(S'[1,∞) ∩ S[1,n] = ∅ | S'_0 = S_i),
/// and the fraction of undecided escape walks.
fn nonintersection_sample(
    n: usize,
    seed: u64,
    block: usize,
    j: u64,
    strata: usize,
    r: f64,
) -> (f64, f64) {
    let w = sample_walk(n, seed, stream(block, 2 * j));
    let pts = &w.steps[1..];
    let t = Target::from_points(pts);
    let mut s = StepStream::new(seed, stream(block, 2 * j + 1));
    let k = strata.min(n);
    let mut p = 0.0;
    let mut undecided = 0;
    for b in 0..k {
        let lo = b * n / k;
        let hi = (b + 1) * n / k;
        let i = lo + s.below((hi - lo) as u64) as usize;
        match run_walk(&t, pts[i], r, max_len(r), &mut s) {
            Fate::Captured => {}
            Fate::Escaped => p += (hi - lo) as f64,
            Fate::Undecided => {
                p += (hi - lo) as f64;
                undecided += 1;
            }
        }
    }
    (p / n as f64, undecided as f64 / k as f64)
}

/// Ê[Cap(S[1,n])] for each n, with r(n) = Ê[Cap]·log(n)/n.
///
/// Bias: a walk counted as escaped at distance R still returns with
/// probability ≤ Cap·envelope(R), and E[Ĉap·Cap] ≤ E[Ĉap²], so the expected
/// overestimate is at most envelope(R)·mean(Ĉap²) plus undecided walks.
pub fn expected_capacity_curve(p: &CapacityCurve, lab: &Lab) -> Result<ExperimentRecord, LabError> {
    validate_curve(p)?;
    let mut rec = ExperimentRecord::new(Experiment::ExpectedCapacity(p.clone()));
    let mut r_values = Vec::new();
    for (block, &n) in p.n_list.iter().enumerate() {
        let r = escape_radius(n, p.escape_factor);
        let samples: Vec<(f64, f64)> = lab
            .map(0..p.samples as u64, |j| {
                capacity_sample(n, p.seed, block, j, p.strata, r)
            })
            .into_iter()
            .collect::<Result<_, _>>()?;
        let caps: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let (mean, se) = mean_se(&caps);
        let sq = caps.iter().map(|c| c * c).sum::<f64>() / caps.len() as f64;
        let und = samples.iter().map(|s| s.1).sum::<f64>() / caps.len() as f64;
        let bias = green_envelope(r) * sq + und;
        let scale = if n > 1 { (n as f64).ln() / n as f64 } else { 0.0 };
        r_values.push(mean * scale);
        rec.rows.push(
            Row::new(n as f64, mean, se)
                .with("bias_bound", bias)
                .with("r_n", mean * scale)
                .with("r_n_err", se * scale)
                .with("escape_radius", r),
        );
    }
    let big: Vec<f64> = p
        .n_list
        .iter()
        .zip(&r_values)
        .filter(|(n, _)| **n > 1)
        .map(|(_, r)| *r)
        .collect();
    if !big.is_empty() {
        let lo = big.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = big.iter().cloned().fold(0.0, f64::max);
        rec.checks.push(Check::at_least("r_n_positive", lo, f64::MIN_POSITIVE));
        rec.checks.push(Check::at_most("r_n_bounded", hi, 3.0));
    }
    Ok(rec)
}

/// p̂(n) = mean over walk points y ∈ S[1,n] of P(R'_y ∩ S[1,n] = ∅) with R'_y
/// the range at positive times of a fresh walk from y; reports p̂·8 log(n)/π².
///
/// Bias: Cap(S) ≤ Σ_i es(S_i) = n·p, so an observed escape returns with
/// probability ≤ n·p·envelope(R) and the overestimate is at most
/// n·envelope(R)·mean(p̂²) plus undecided walks.
pub fn nonintersection_curve(p: &CapacityCurve, lab: &Lab) -> Result<ExperimentRecord, LabError> {
    validate_curve(p)?;
    let mut rec = ExperimentRecord::new(Experiment::Nonintersection(p.clone()));
    let mut points = Vec::new();
    for (block, &n) in p.n_list.iter().enumerate() {
        let r = escape_radius(n, p.escape_factor);
        let samples = lab.map(0..p.samples as u64, |j| {
            nonintersection_sample(n, p.seed, block, j, p.strata, r)
        });
        let ps: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let (mean, mut se) = mean_se(&ps);
        if ps.len() == 1 {
            let k = p.strata.min(n) as f64;
            se = (mean * (1.0 - mean) / k).sqrt();
        }
        let sq = ps.iter().map(|v| v * v).sum::<f64>() / ps.len() as f64;
        let und = samples.iter().map(|s| s.1).sum::<f64>() / ps.len() as f64;
        let bias = n as f64 * green_envelope(r) * sq + und;
        let norm = 8.0 * (n as f64).ln() / (PI * PI);
        rec.rows.push(
            Row::new(n as f64, mean, se)
                .with("normalized", mean * norm)
                .with("normalized_err", se * norm)
                .with("bias_bound", bias)
                .with("escape_radius", r),
        );
        points.push((n, mean, se, bias, mean * norm));
    }
    if points.len() > 1 {
        let worst = points
            .windows(2)
            .map(|w| w[1].1 - w[0].1 - 3.0 * (w[0].2.powi(2) + w[1].2.powi(2)).sqrt() - w[1].3)
            .fold(f64::NEG_INFINITY, f64::max);
        rec.checks.push(Check::at_most("nonincreasing", worst, 0.0));
    }
    for &(n, _, _, _, norm) in &points {
        if n >= 10_000 {
            rec.checks.push(Check::at_most(
                &format!("normalized_window_n{n}"),
                (norm - 1.0).abs(),
                0.5,
            ));
        }
    }
    Ok(rec)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailPoint {
    pub lambda: f64,
    pub count: usize,
    pub probability: f64,
    pub probability_err: f64,
    /// −log(P̂)/b; absent when no event was seen.
    pub rate: Option<f64>,
    pub rate_err: Option<f64>,
}

/// Empirical P(X − center ≤ −λ·unit) and rates −log(P̂)/b over the grid.
pub fn tail_rates(values: &[f64], center: f64, unit: f64, b: f64, grid: &[f64]) -> Vec<TailPoint> {
    let m = values.len() as f64;
    grid.iter()
        .map(|&lambda| {
            let cut = center - lambda * unit;
            let count = values.iter().filter(|&&v| v <= cut).count();
            let probability = count as f64 / m;
            let probability_err = (probability * (1.0 - probability) / m).sqrt();
            let (rate, rate_err) = if count > 0 {
                (
                    Some(-probability.ln() / b),
                    Some(probability_err / (probability * b)),
                )
            } else {
                (None, None)
            };
            TailPoint {
                lambda,
                count,
                probability,
                probability_err,
                rate,
                rate_err,
            }
        })
        .collect()
}

/// Empirical lower-tail rates ρ̂(λ) = −(1/b_n) log P̂(Cap − Ê[Cap] ≤ −λ n b_n/(log n)²)
/// compared in shape with I₄(λ).
pub fn lower_tail_experiment(p: &LowerTail, lab: &Lab) -> Result<ExperimentRecord, LabError> {
    if p.n < 16 || p.lambda_grid.is_empty() || p.lambda_grid.iter().any(|l| !(*l >= 0.0)) {
        return Err(LabError::Parameter("need n ≥ 16 and a nonempty λ grid of λ ≥ 0".into()));
    }
    if p.lambda_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LabError::Parameter("λ grid must be strictly ascending".into()));
    }
    if p.samples < 2 || p.max_samples < p.samples || p.strata == 0 || !(p.escape_factor > 0.0) {
        return Err(LabError::Parameter(
            "need 2 ≤ samples ≤ max_samples, strata ≥ 1, escape_factor > 0".into(),
        ));
    }
    let kappa = match p.kappa {
        Some(k) => k,
        None => maximize_ratio(&GnConfig::default())?.kappa,
    };
    let n = p.n;
    let b = p.b_rule.eval(n) as f64;
    let ln = (n as f64).ln();
    let unit = n as f64 * b / (ln * ln);
    let r = escape_radius(n, p.escape_factor);
    let lambda_max = *p.lambda_grid.last().unwrap();

    let mut samples: Vec<(f64, f64)> = Vec::new();
    let mut total = p.samples;
    loop {
        let more: Vec<(f64, f64)> = lab
            .map(samples.len() as u64..total as u64, |j| {
                capacity_sample(n, p.seed, 0, j, p.strata, r)
            })
            .into_iter()
            .collect::<Result<_, _>>()?;
        samples.extend(more);
        let caps: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let (center, _) = mean_se(&caps);
        let tail = tail_rates(&caps, center, unit, b, &[lambda_max]);
        if tail[0].count >= 10 || total >= p.max_samples {
            break;
        }
        total = (2 * total).min(p.max_samples);
    }

    let caps: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let (center, center_err) = mean_se(&caps);
    let sq = caps.iter().map(|c| c * c).sum::<f64>() / caps.len() as f64;
    let und = samples.iter().map(|s| s.1).sum::<f64>() / caps.len() as f64;
    let bias = green_envelope(r) * sq + und;
    let points = tail_rates(&caps, center, unit, b, &p.lambda_grid);

    let mut rec = ExperimentRecord::new(Experiment::LowerTail(p.clone()));
    for t in &points {
        let gn = deviation_constants(kappa, t.lambda)?.rate;
        let mut row = Row {
            x: t.lambda,
            y: t.rate,
            err: t.rate_err,
            extra: Default::default(),
        }
        .with("tail_probability", t.probability)
        .with("tail_probability_err", t.probability_err)
        .with("count", t.count as f64)
        .with("offset", t.lambda * unit)
        .with("rate_gn", gn);
        if t.count < 10 {
            rec.flags.push(format!("insufficient_tail_mass lambda={}", t.lambda));
            row = row.with("insufficient_tail_mass", 1.0);
        }
        rec.rows.push(row);
    }
    rec.put("mean_capacity", center);
    rec.put("mean_capacity_err", center_err);
    rec.put("unit", unit);
    rec.put("b_n", b);
    rec.put("kappa", kappa);
    rec.put("samples", caps.len() as f64);
    rec.put("bias_bound", bias);
    rec.put("escape_radius", r);

    let valid: Vec<&TailPoint> = points.iter().filter(|t| t.rate.is_some()).collect();
    let worst_drop = valid
        .windows(2)
        .map(|w| w[0].rate.unwrap() - w[1].rate.unwrap())
        .fold(0.0, f64::max);
    rec.checks.push(Check::at_most("rate_nondecreasing", worst_drop, 0.0));
    let x: Vec<f64> = valid.iter().map(|t| t.lambda).collect();
    let y: Vec<f64> = valid.iter().map(|t| t.rate.unwrap()).collect();
    let e: Vec<f64> = valid.iter().map(|t| t.rate_err.unwrap()).collect();
    let corr = linear_fit(&x, &y, &e).map(|f| {
        rec.put("rate_slope", f.slope);
        rec.put("rate_intercept", f.intercept);
        rec.put("rate_slope_err", f.slope_err);
        f.correlation
    });
    rec.checks
        .push(Check::at_least("rate_linear_correlation", corr.unwrap_or(0.0), 0.9));
    if let Some(&lmin) = p.lambda_grid.iter().find(|l| **l > 0.0) {
        let budget = 0.01 * lmin * unit;
        rec.put("bias_budget", budget);
        rec.checks.push(Check::at_most("bias_budget", bias, budget));
    }
    Ok(rec)
}
