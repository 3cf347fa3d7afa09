use crate::{GnError, SPHERE_AREA};
use serde::{Deserialize, Serialize};

/// Radial function sampled on an increasing grid; the last value is 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

impl RadialProfile {
    /// n log-spaced radii from r_min to r_max.
    pub fn log_grid(n: usize, r_min: f64, r_max: f64) -> Result<Vec<f64>, GnError> {
        if n < 3 {
            return Err(GnError::Grid("need at least 3 points"));
        }
        if !(r_min > 0.0 && r_max > r_min) {
            return Err(GnError::Grid("need 0 < r_min < r_max"));
        }
        let (a, b) = (r_min.ln(), r_max.ln());
        Ok((0..n)
            .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
            .collect())
    }

    /// Samples f on the grid and forces the decay condition f(r_max) = 0.
    pub fn from_fn(radii: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self, GnError> {
        let mut values: Vec<f64> = radii.iter().map(|&r| f(r)).collect();
        if let Some(v) = values.last_mut() {
            *v = 0.0;
        }
        let p = Self { radii, values };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), GnError> {
        if self.radii.len() != self.values.len() || self.radii.len() < 3 {
            return Err(GnError::Grid("radii and values must match, length ≥ 3"));
        }
        if self.radii[0] <= 0.0 || self.radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(GnError::Grid("radii must be positive and strictly increasing"));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(GnError::Degenerate("non-finite value"));
        }
        if *self.values.last().unwrap() != 0.0 {
            return Err(GnError::Degenerate("trailing value must be 0"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// Volume weights 2π² r³ dr (trapezoid cells) with the inner ball folded into the first.
    pub fn weights(&self) -> Vec<f64> {
        cell_weights(&self.radii)
    }

    /// Interpolation in log r (cubic Catmull-Rom inside, linear in the end
    /// cells); constant below the grid, 0 above.
    pub fn eval(&self, r: f64) -> f64 {
        let n = self.len();
        if r <= self.radii[0] {
            return self.values[0];
        }
        if r >= self.radii[n - 1] {
            return 0.0;
        }
        let i = self.radii.partition_point(|&x| x <= r) - 1;
        let (r0, r1) = (self.radii[i].ln(), self.radii[i + 1].ln());
        let t = (r.ln() - r0) / (r1 - r0);
        let v = &self.values;
        if i == 0 || i + 2 >= n {
            return v[i] * (1.0 - t) + v[i + 1] * t;
        }
        let (p0, p1, p2, p3) = (v[i - 1], v[i], v[i + 1], v[i + 2]);
        0.5 * (2.0 * p1
            + (p2 - p0) * t
            + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t * t
            + (3.0 * (p1 - p2) + p3 - p0) * t * t * t)
    }

    /// The same function sampled on another grid.
    pub fn resample(&self, radii: Vec<f64>) -> Result<Self, GnError> {
        Self::from_fn(radii, |r| self.eval(r))
    }

    /// f ↦ c f.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            radii: self.radii.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// f ↦ f(λ·), represented exactly on the grid r/λ.
    pub fn dilated(&self, lambda: f64) -> Self {
        Self {
            radii: self.radii.iter().map(|r| r / lambda).collect(),
            values: self.values.clone(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,f\n");
        for (r, v) in self.radii.iter().zip(&self.values) {
            s.push_str(&format!("{r:e},{v:e}\n"));
        }
        s
    }
}

pub(crate) fn cell_weights(r: &[f64]) -> Vec<f64> {
    let n = r.len();
    (0..n)
        .map(|i| {
            let lo = if i == 0 { r[0] } else { 0.5 * (r[i - 1] + r[i]) };
            let hi = if i + 1 == n { r[n - 1] } else { 0.5 * (r[i] + r[i + 1]) };
            let mut w = SPHERE_AREA * r[i].powi(3) * (hi - lo);
            if i == 0 {
                w += 0.25 * SPHERE_AREA * r[0].powi(4);
            }
            w
        })
        .collect()
}
