//! Exponentially scaled modified Bessel functions e^{-x} I_n(x), n ≥ 0.

/// Fills `out[n] = e^{-x} I_n(x)` for `n = 0..out.len()`.
pub fn scaled_bessel_i(x: f64, out: &mut [f64]) {
    assert!(x >= 0.0);
    out.iter_mut().for_each(|v| *v = 0.0);
    if out.is_empty() {
        return;
    }
    if x == 0.0 {
        out[0] = 1.0;
    } else if x < 1.0 {
        series(x, out);
    } else {
        miller(x, out);
    }
}

fn series(x: f64, out: &mut [f64]) {
    let h = 0.5 * x;
    let q = h * h;
    let e = (-x).exp();
    // lead = (x/2)^n / n!
    let mut lead = 1.0;
    for (n, o) in out.iter_mut().enumerate() {
        if n > 0 {
            lead *= h / n as f64;
        }
        if lead == 0.0 {
            break;
        }
        let mut term = lead;
        let mut sum = lead;
        for m in 1..200 {
            term *= q / (m as f64 * (m + n) as f64);
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }
        *o = e * sum;
    }
}

fn miller(x: f64, out: &mut [f64]) {
    let nmax = out.len() - 1;
    let start = nmax + (80.0 * x).sqrt() as usize + 20;
    let two_over_x = 2.0 / x;
    let mut bkp1 = 0.0;
    let mut bk = 1e-280;
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        if k <= nmax {
            out[k] = bk;
        }
        norm += 2.0 * bk;
        let bkm1 = bkp1 + k as f64 * two_over_x * bk;
        bkp1 = bk;
        bk = bkm1;
        if bk > 1e250 {
            bk *= 1e-250;
            bkp1 *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut().skip(k.saturating_sub(1).max(1)) {
                *v *= 1e-250;
            }
        }
    }
    out[0] = bk;
    norm += bk;
    let inv = 1.0 / norm;
    out.iter_mut().for_each(|v| *v *= inv);
}

/// Coefficients a_j(n) of e^{-x} I_n(x) ~ (2πx)^{-1/2} Σ_j (-1)^j a_j(n) x^{-j}.
pub fn asymptotic_coeffs(n: u32, terms: usize) -> Vec<f64> {
    let mu = 4.0 * (n as f64) * (n as f64);
    let mut a = Vec::with_capacity(terms);
    let mut c = 1.0;
    a.push(1.0);
    for j in 1..terms {
        let odd = (2 * j - 1) as f64;
        c *= (mu - odd * odd) / (j as f64 * 8.0);
        a.push(if j % 2 == 1 { -c } else { c });
    }
    a
}
