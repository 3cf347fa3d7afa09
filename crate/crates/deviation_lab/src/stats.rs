//! Small estimators shared by the experiments.

/// Sample mean and its standard error (0 for fewer than two values).
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Slope error propagated from independent per-point errors.
    pub slope_err: f64,
    pub intercept_err: f64,
    /// Pearson correlation of the points.
    pub correlation: f64,
}

/// Ordinary least squares y ≈ intercept + slope·x.
pub fn linear_fit(x: &[f64], y: &[f64], err: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n || err.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut vs = 0.0;
    let mut vi = 0.0;
    for i in 0..n {
        let ws = (x[i] - mx) / sxx;
        let wi = 1.0 / n as f64 - mx * ws;
        vs += (ws * err[i]).powi(2);
        vi += (wi * err[i]).powi(2);
    }
    let correlation = if syy > 0.0 {
        sxy / (sxx * syy).sqrt()
    } else {
        0.0
    };
    Some(LinearFit {
        slope,
        intercept,
        slope_err: vs.sqrt(),
        intercept_err: vi.sqrt(),
        correlation,
    })
}
