//! Gauss–Legendre rules and a bisection-adaptive integrator.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// n-point rule on [-1, 1], nodes by Newton iteration on P_n.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let h = 0.5 * (b - a);
        let c = 0.5 * (a + b);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + h * x);
        }
        s * h
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub err: f64,
    pub converged: bool,
}

/// Globally adaptive bisection: the interval with the largest local error
/// estimate (rule vs. sum over halves) is split until the total is below `tol`.
pub fn adaptive<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    tol: f64,
    max_splits: u32,
    mut f: F,
) -> QuadResult {
    let mut heap = BinaryHeap::new();
    let push = |heap: &mut BinaryHeap<Piece>, a: f64, b: f64, f: &mut F| {
        let m = 0.5 * (a + b);
        let whole = rule.integrate(a, b, &mut *f);
        let halves = rule.integrate(a, m, &mut *f) + rule.integrate(m, b, &mut *f);
        heap.push(Piece {
            a,
            b,
            value: halves,
            err: (halves - whole).abs(),
        });
    };
    push(&mut heap, a, b, &mut f);
    let mut splits = 0;
    loop {
        let total: f64 = heap.iter().map(|p| p.err).sum();
        if total <= tol || splits >= max_splits {
            let value = heap.iter().map(|p| p.value).sum();
            return QuadResult {
                value,
                err: total,
                converged: total <= tol,
            };
        }
        let worst = heap.pop().unwrap();
        let m = 0.5 * (worst.a + worst.b);
        push(&mut heap, worst.a, m, &mut f);
        push(&mut heap, m, worst.b, &mut f);
        splits += 1;
    }
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}
