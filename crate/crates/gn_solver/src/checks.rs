use crate::energy::Forms;
use crate::{gn_ratio, GnError, RadialProfile, SPHERE_AREA};
use faer::{Mat, Par, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn sphere_point(rng: &mut ChaCha8Rng) -> [f64; 4] {
    loop {
        let v: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.map(|x| x / n);
        }
    }
}

fn green(d2: f64) -> f64 {
    1.0 / (SPHERE_AREA * d2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSample {
    pub r: f64,
    pub s: f64,
    pub mean: f64,
    pub std_err: f64,
    /// 1/(2π² max(r, s)²).
    pub exact: f64,
}

impl KernelSample {
    pub fn z_score(&self) -> f64 {
        (self.mean - self.exact) / self.std_err
    }
}

/// Average of G(r x̂ - s ŷ) over independent uniform x̂, ŷ ∈ S³. The variance
/// is finite only for r ≠ s.
pub fn kernel_mc(r: f64, s: f64, samples: usize, seed: u64, stream: u64) -> KernelSample {
    let mut g = rng(seed, stream);
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..samples {
        let x = sphere_point(&mut g);
        let y = sphere_point(&mut g);
        let d2: f64 = (0..4).map(|i| (r * x[i] - s * y[i]).powi(2)).sum();
        let v = green(d2);
        sum += v;
        sq += v * v;
    }
    let m = samples as f64;
    let mean = sum / m;
    KernelSample {
        r,
        s,
        mean,
        std_err: ((sq / m - mean * mean) / (m - 1.0)).max(0.0).sqrt(),
        exact: 1.0 / (SPHERE_AREA * r.max(s).powi(2)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEnergy {
    pub estimate: f64,
    pub std_err: f64,
}

/// Eight-dimensional Monte Carlo of ∫∫ g²(x) G(x - y) g²(y) dx dy for radial g
/// supported in the unit ball. x ~ N(0, σ²I); y = x + z with z drawn from an
/// equal mixture of a |z|⁻³ law on |z| < ρ and an independent N(0, σ²I) point,
/// which keeps the weights bounded.
pub fn quartic_energy_mc(g: impl Fn(f64) -> f64, samples: usize, seed: u64) -> McEnergy {
    let sigma = 0.5;
    let rho = 0.5;
    let gauss = |v: &[f64; 4]| {
        let r2: f64 = v.iter().map(|x| x * x).sum();
        (-0.5 * r2 / (sigma * sigma)).exp() / (2.0 * PI * sigma * sigma).powi(2)
    };
    let q1 = |d: f64| if d < rho { 1.0 / (rho * SPHERE_AREA * d.powi(3)) } else { 0.0 };
    let mut rg = rng(seed, 0);
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..samples {
        let x: [f64; 4] = std::array::from_fn(|_| sigma * rg.sample::<f64, _>(StandardNormal));
        let y: [f64; 4] = if rg.gen::<bool>() {
            let dir = sphere_point(&mut rg);
            let d = rho * rg.gen::<f64>();
            std::array::from_fn(|i| x[i] + d * dir[i])
        } else {
            std::array::from_fn(|_| sigma * rg.sample::<f64, _>(StandardNormal))
        };
        let z2: f64 = (0..4).map(|i| (y[i] - x[i]).powi(2)).sum();
        let rx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let ry = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let num = g(rx).powi(2) * green(z2) * g(ry).powi(2);
        let w = if num == 0.0 {
            0.0
        } else {
            num / (gauss(&x) * (0.5 * q1(z2.sqrt()) + 0.5 * gauss(&y)))
        };
        sum += w;
        sq += w * w;
    }
    let m = samples as f64;
    let mean = sum / m;
    McEnergy {
        estimate: mean,
        std_err: ((sq / m - mean * mean) / (m - 1.0)).max(0.0).sqrt(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondVariation {
    pub ell: u32,
    /// Largest eigenvalue of the second variation of log R in the ℓ-th
    /// angular sector (W-normalised); ≤ 0 means no ascent direction.
    pub max_eigenvalue: f64,
    /// Largest eigenvalue of the quartic part alone, for scale.
    pub scale: f64,
}

impl SecondVariation {
    pub fn relative(&self) -> f64 {
        self.max_eigenvalue / self.scale
    }
}

/// Second variation of log R at f along f + ε u(r) Y_ℓ(x̂) for a degree-ℓ
/// harmonic on S³ (ℓ ≥ 1), using the multipole kernel
/// K_ℓ(r,s) = r_<^ℓ / (2π² (ℓ+1) r_>^{ℓ+2}) and the angular term ℓ(ℓ+2)u²/r².
pub fn second_variation(f: &RadialProfile, ell: u32) -> Result<SecondVariation, GnError> {
    if ell == 0 {
        return Err(GnError::Config("the radial sector is not a perturbation".into()));
    }
    gn_ratio(f)?;
    let forms = Forms::new(&f.radii);
    let v = &f.values;
    let r = &f.radii;
    let n = v.len() - 1;
    let q = forms.quartic(v);
    let nn = forms.norm(v);
    let d = forms.dirichlet(v);
    let phi = forms.potential(v);
    let l = ell as f64;
    let kl = |i: usize, j: usize| {
        let (a, b) = if r[i] < r[j] { (r[i], r[j]) } else { (r[j], r[i]) };
        (a / b).powi(ell as i32) / (b * b) / (SPHERE_AREA * (l + 1.0))
    };
    let w = &forms.w;
    let sw: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    let quartic = Mat::<f64>::from_fn(n, n, |i, j| {
        let mut m = 4.0 * v[i] * v[j] * w[i] * w[j] * kl(i, j);
        if i == j {
            m += 2.0 * w[i] * phi[i];
        }
        m / (q * sw[i] * sw[j])
    });
    let stiff = Mat::<f64>::from_fn(n, n, |i, j| {
        let a = if i == j {
            let left = if i > 0 { forms.c[i - 1] } else { 0.0 };
            left + forms.c[i] + l * (l + 2.0) * w[i] / (r[i] * r[i])
        } else if i + 1 == j {
            -forms.c[i]
        } else if j + 1 == i {
            -forms.c[j]
        } else {
            0.0
        };
        a / (d * sw[i] * sw[j])
    });
    let total = Mat::<f64>::from_fn(n, n, |i, j| {
        quartic[(i, j)] - stiff[(i, j)] - if i == j { 1.0 / nn } else { 0.0 }
    });
    faer::set_global_parallelism(Par::Seq);
    let top = |m: &Mat<f64>| -> Result<f64, GnError> {
        let e = m
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|_| GnError::Degenerate("eigenvalue solver failed"))?;
        Ok(*e.last().unwrap())
    };
    Ok(SecondVariation {
        ell,
        max_eigenvalue: top(&total)?,
        scale: top(&quartic)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualForm {
    /// sup_s { π²/4 · Q(h_s)^{1/2} - ⅛ ‖∇h_s‖² } over h_s(r) = s² h(s r), ‖h_s‖ = 1.
    pub value: f64,
    pub best_scale: f64,
    /// π⁴ κ̃⁴ / 8.
    pub predicted: f64,
}

impl DualForm {
    pub fn relative_error(&self) -> f64 {
        (self.value / self.predicted - 1.0).abs()
    }
}

/// Evaluates the variational dual over L²-preserving dilations of h, with
/// each dilation resampled onto the grid of h.
pub fn dual_form(h: &RadialProfile, kappa: f64) -> Result<DualForm, GnError> {
    gn_ratio(h)?;
    let forms = Forms::new(&h.radii);
    let norm = forms.norm(&h.values).sqrt();
    let functional = |ls: f64| {
        let s = ls.exp();
        let hs: Vec<f64> = h
            .radii
            .iter()
            .enumerate()
            .map(|(i, &r)| if i + 1 == h.len() { 0.0 } else { s * s * h.eval(s * r) / norm })
            .collect();
        PI * PI / 4.0 * forms.quartic(&hs).sqrt() - forms.dirichlet(&hs) / 8.0
    };
    // bracket the maximum on a coarse scan, then golden section
    let scan: Vec<(f64, f64)> = (-60..=60).map(|k| {
        let ls = k as f64 * 0.1;
        (ls, functional(ls))
    }).collect();
    let (mut best, _) = scan
        .iter()
        .cloned()
        .fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let (mut a, mut b) = (best - 0.1, best + 0.1);
    let gr = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - gr * (b - a);
        let d = a + gr * (b - a);
        if functional(c) > functional(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best = 0.5 * (a + b);
    Ok(DualForm {
        value: functional(best),
        best_scale: best.exp(),
        predicted: PI.powi(4) * kappa.powi(4) / 8.0,
    })
}
