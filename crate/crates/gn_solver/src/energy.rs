use crate::profile::cell_weights;
use crate::{GnError, RadialProfile, SPHERE_AREA};
use serde::{Deserialize, Serialize};

/// Grid-dependent coefficients of the three forms.
#[derive(Debug, Clone)]
pub(crate) struct Forms {
    /// Volume weights.
    pub w: Vec<f64>,
    /// D = Σ c_i (f_{i+1} - f_i)².
    pub c: Vec<f64>,
    /// Mean-value kernel 1/(2π² r²).
    pub k: Vec<f64>,
}

impl Forms {
    pub fn new(r: &[f64]) -> Self {
        let c = r
            .windows(2)
            .map(|p| {
                let mid = 0.5 * (p[0] + p[1]);
                SPHERE_AREA * mid.powi(3) / (p[1] - p[0])
            })
            .collect();
        Self {
            w: cell_weights(r),
            c,
            k: r.iter().map(|x| 1.0 / (SPHERE_AREA * x * x)).collect(),
        }
    }

    pub fn norm(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.w).map(|(v, w)| v * v * w).sum()
    }

    pub fn dirichlet(&self, f: &[f64]) -> f64 {
        f.windows(2).zip(&self.c).map(|(p, c)| c * (p[1] - p[0]).powi(2)).sum()
    }

    /// φ_k = Σ_j f_j² w_j K(r_k, r_j), K(r, s) = 1/(2π² max(r, s)²).
    pub fn potential(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        let u: Vec<f64> = f.iter().zip(&self.w).map(|(v, w)| v * v * w).collect();
        let mut phi = vec![0.0; n];
        let mut prefix = 0.0;
        for i in 0..n {
            prefix += u[i];
            phi[i] = self.k[i] * prefix;
        }
        let mut suffix = 0.0;
        for i in (0..n).rev() {
            phi[i] += suffix;
            suffix += u[i] * self.k[i];
        }
        phi
    }

    pub fn quartic(&self, f: &[f64]) -> f64 {
        let phi = self.potential(f);
        f.iter()
            .zip(&self.w)
            .zip(&phi)
            .map(|((v, w), p)| v * v * w * p)
            .sum()
    }

    /// (Q, N, D, ∇ log R) with the last component pinned to 0.
    pub fn log_ratio_gradient(&self, f: &[f64]) -> (f64, f64, f64, Vec<f64>) {
        let n = f.len();
        let phi = self.potential(f);
        let q: f64 = (0..n).map(|i| f[i] * f[i] * self.w[i] * phi[i]).sum();
        let nn = self.norm(f);
        let d = self.dirichlet(f);
        let mut g = vec![0.0; n];
        for i in 0..n {
            let dq = 4.0 * phi[i] * f[i] * self.w[i];
            let dn = 2.0 * self.w[i] * f[i];
            let mut dd = 0.0;
            if i > 0 {
                dd += 2.0 * self.c[i - 1] * (f[i] - f[i - 1]);
            }
            if i + 1 < n {
                dd -= 2.0 * self.c[i] * (f[i + 1] - f[i]);
            }
            g[i] = 0.25 * (dq / q - dn / nn - dd / d);
        }
        g[n - 1] = 0.0;
        (q, nn, d, g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Energies {
    pub l2_norm: f64,
    pub grad_norm: f64,
    pub quartic_energy: f64,
}

pub fn energies(f: &RadialProfile) -> Energies {
    let forms = Forms::new(&f.radii);
    Energies {
        l2_norm: forms.norm(&f.values).sqrt(),
        grad_norm: forms.dirichlet(&f.values).sqrt(),
        quartic_energy: forms.quartic(&f.values),
    }
}

/// ∫∫ f²(x) G(x - y) f²(y) dx dy for radial f.
pub fn quartic_energy(f: &RadialProfile) -> f64 {
    Forms::new(&f.radii).quartic(&f.values)
}

/// Q^{1/4} / (‖f‖^{1/2} ‖∇f‖^{1/2}).
pub fn gn_ratio(f: &RadialProfile) -> Result<f64, GnError> {
    f.validate()?;
    let e = energies(f);
    if e.l2_norm == 0.0 {
        return Err(GnError::Degenerate("zero profile"));
    }
    if e.grad_norm == 0.0 {
        return Err(GnError::Degenerate("zero gradient"));
    }
    Ok(e.quartic_energy.powf(0.25) / (e.l2_norm * e.grad_norm).sqrt())
}

/// ∇ log R with respect to the grid values (last entry fixed at 0).
pub fn log_ratio_gradient(f: &RadialProfile) -> Result<Vec<f64>, GnError> {
    gn_ratio(f)?;
    Ok(Forms::new(&f.radii).log_ratio_gradient(&f.values).3)
}

/// ∇R = R ∇ log R.
pub fn ratio_gradient(f: &RadialProfile) -> Result<Vec<f64>, GnError> {
    let r = gn_ratio(f)?;
    Ok(log_ratio_gradient(f)?.into_iter().map(|g| r * g).collect())
}
