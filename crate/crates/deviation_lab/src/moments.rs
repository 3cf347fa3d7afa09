use crate::record::{Check, Experiment, ExperimentRecord, Row};
use crate::stats::mean_se;
use crate::{stream, Lab, LabError};
use crossterm::{b_rule, tl_prime, CrossTermConfig};
use serde::{Deserialize, Serialize};
use walk_sim::sample_walk;

/// Largest n for which TL′ is computed with exact equilibrium solves.
pub const TL_MAX_N: usize = 1 << 12;

/// Number of blocks b_n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BRule {
    /// max(1, ⌊log log n⌋).
    #[default]
    LogLog,
    Fixed(usize),
}

impl BRule {
    pub fn eval(self, n: usize) -> usize {
        match self {
            BRule::LogLog => b_rule(n),
            BRule::Fixed(b) => b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TlMoments {
    pub n: usize,
    pub m_max: u32,
    /// Independent walk pairs.
    pub samples: usize,
    pub seed: u64,
    pub b_rule: BRule,
    /// Moment-generating parameter, recorded only.
    pub theta: Option<f64>,
}

impl Default for TlMoments {
    fn default() -> Self {
        Self {
            n: 1 << 10,
            m_max: 3,
            samples: 50,
            seed: 0,
            b_rule: BRule::LogLog,
            theta: None,
        }
    }
}

/// Empirical moments of TL′_n over independent pairs and
/// Ĉ_m = (Ê[(TL′)^m] / (m!·(n/(log n)²)^m))^{1/m}.
pub fn tl_moment_check(p: &TlMoments, lab: &Lab) -> Result<ExperimentRecord, LabError> {
    if p.n > TL_MAX_N {
        return Err(LabError::Budget {
            n: p.n,
            max: TL_MAX_N,
        });
    }
    if p.n < 3 || !(1..=4).contains(&p.m_max) || p.samples == 0 {
        return Err(LabError::Parameter("need n ≥ 3, 1 ≤ m_max ≤ 4, samples ≥ 1".into()));
    }
    let b = p.b_rule.eval(p.n);
    if b == 0 || b > p.n {
        return Err(LabError::Parameter(format!("b_n = {b} outside 1..=n")));
    }
    let cfg = CrossTermConfig::default();
    let pairs: Vec<(f64, f64)> = lab
        .map(0..p.samples as u64, |j| {
            let s1 = sample_walk(p.n, p.seed, stream(0, 2 * j));
            let s2 = sample_walk(p.n, p.seed, stream(0, 2 * j + 1));
            tl_prime(&s1, &s2, b, lab.table, &cfg).map(|t| (t.tl_prime.value, t.tl.value))
        })
        .into_iter()
        .collect::<Result<_, _>>()?;

    let mut rec = ExperimentRecord::new(Experiment::TlMoments(p.clone()));
    let ln = (p.n as f64).ln();
    let scale = p.n as f64 / (ln * ln);
    let mut constants = Vec::new();
    let mut factorial = 1.0;
    for m in 1..=p.m_max {
        factorial *= m as f64;
        let powers: Vec<f64> = pairs.iter().map(|(t, _)| t.powi(m as i32)).collect();
        let (mu, se) = mean_se(&powers);
        let c = (mu / (factorial * scale.powi(m as i32))).powf(1.0 / m as f64);
        let c_err = c * se / (m as f64 * mu);
        if m <= 3 {
            constants.push(c);
        }
        rec.rows.push(
            Row::new(m as f64, c, c_err)
                .with("moment", mu)
                .with("moment_err", se),
        );
    }
    let violations = pairs.iter().filter(|(tp, t)| tp < t).count();
    let (mean_tp, mean_tp_err) = mean_se(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let (mean_tl, _) = mean_se(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    rec.put("pairs", pairs.len() as f64);
    rec.put("b_n", b as f64);
    rec.put("violations", violations as f64);
    rec.put("mean_tl_prime", mean_tp);
    rec.put("mean_tl", mean_tl);
    rec.put("first_moment_scaled", mean_tp / scale);
    rec.put("first_moment_scaled_err", mean_tp_err / scale);
    if let Some(theta) = p.theta {
        rec.put("theta", theta);
    }
    rec.checks
        .push(Check::at_most("tl_prime_dominates", violations as f64, 0.0));
    if constants.len() > 1 {
        let hi = constants.iter().cloned().fold(0.0, f64::max);
        let lo = constants.iter().cloned().fold(f64::INFINITY, f64::min);
        rec.checks
            .push(Check::at_most("moment_constants_ratio", hi / lo, 3.0));
    }
    Ok(rec)
}
