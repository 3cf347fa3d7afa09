use crate::terms::{bilinear, cross_terms, CrossTermConfig, Equilibrium, Term};
use crate::CrossTermError;
use lattice_green::GreenTable;
use serde::{Deserialize, Serialize};
use walk_sim::{PointSet, WalkPath};

/// b_n = max(1, ⌊ln ln n⌋).
pub fn b_rule(n: usize) -> usize {
    if n < 3 {
        return 1;
    }
    ((n as f64).ln().ln().floor() as usize).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlLambda {
    pub sl: Term,
    pub lambda: Term,
    pub level: u32,
}

/// SL_n over S[1,n] and Λ_l = Σ_j χ(S^{(2j-1)}, S^{(2j)}) over the sibling
/// pairs among the 2^l segments of length n/2^l (l ≥ 1; l = 1 pairs the halves).
pub fn sl_and_lambda(
    path: &WalkPath,
    level: u32,
    table: &GreenTable,
    cfg: &CrossTermConfig,
) -> Result<SlLambda, CrossTermError> {
    let s = path.range();
    let e = Equilibrium::new(&s, table, &cfg.solve)?;
    let sl = bilinear(&s, &e.es, e.tol, &s, &e.es, e.tol, table)?;
    let lambda = lambda_level(path, level, table, cfg)?;
    Ok(SlLambda { sl, lambda, level })
}

fn lambda_level(
    path: &WalkPath,
    level: u32,
    table: &GreenTable,
    cfg: &CrossTermConfig,
) -> Result<Term, CrossTermError> {
    if level == 0 {
        return Err(CrossTermError::Parameter("levels start at 1".into()));
    }
    let pairs = 1usize << (level - 1);
    let mut value = 0.0;
    let mut tol = 0.0;
    for j in 1..=pairs {
        let a = path.segment(level, 2 * j - 1)?.range();
        let b = path.segment(level, 2 * j)?.range();
        let r = cross_terms(&a, &b, table, cfg)?;
        value += r.chi.value;
        tol += r.chi.tol;
    }
    Ok(Term { value, tol })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplittingDecomposition {
    /// Cap(S[0,n]).
    pub capacity: f64,
    /// Cap of the 2^L finest segments.
    pub segment_capacities: Vec<f64>,
    /// Λ_1 … Λ_L.
    pub lambdas: Vec<f64>,
    /// ε_L = Cap - Σ Cap(segments) + Σ Λ_l.
    pub epsilon: f64,
}

/// Cap(S) = Σ_i Cap(S^{(i),m_L}) - Σ_{l=1}^{L} Λ_l + ε_L.
pub fn splitting_decomposition(
    path: &WalkPath,
    levels: u32,
    table: &GreenTable,
    cfg: &CrossTermConfig,
) -> Result<SplittingDecomposition, CrossTermError> {
    let whole = path.range_of(0, path.len())?;
    let capacity = Equilibrium::new(&whole, table, &cfg.solve)?.capacity;
    let mut segment_capacities = Vec::new();
    for k in 1..=(1usize << levels) {
        let seg = path.segment(levels, k)?.range();
        segment_capacities.push(Equilibrium::new(&seg, table, &cfg.solve)?.capacity);
    }
    let mut lambdas = Vec::new();
    for l in 1..=levels {
        lambdas.push(lambda_level(path, l, table, cfg)?.value);
    }
    let epsilon = capacity - segment_capacities.iter().sum::<f64>() + lambdas.iter().sum::<f64>();
    Ok(SplittingDecomposition {
        capacity,
        segment_capacities,
        lambdas,
        epsilon,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TlPrime {
    pub tl_prime: Term,
    /// TL over the full ranges S¹[0,n], S²[0,n].
    pub tl: Term,
    pub blocks: usize,
}

/// Pieces S[⌊(i-1)n/b⌋, ⌊in/b⌋], i = 1..b.
fn blocks(path: &WalkPath, b: usize) -> Result<Vec<PointSet>, CrossTermError> {
    let n = path.len();
    if b == 0 || b > n.max(1) {
        return Err(CrossTermError::Parameter(format!("cannot cut {n} steps into {b} blocks")));
    }
    (1..=b)
        .map(|i| Ok(path.range_of((i - 1) * n / b, i * n / b)?))
        .collect()
}

/// TL'_n = Σ_{i,j=1}^{b} Σ_{x¹∈S^{1,i}, x²∈S^{2,j}} es_{S^{1,i}}(x¹) G_D(x¹-x²) es_{S^{2,j}}(x²),
/// together with TL_n for the same pair.
pub fn tl_prime(
    s1: &WalkPath,
    s2: &WalkPath,
    b: usize,
    table: &GreenTable,
    cfg: &CrossTermConfig,
) -> Result<TlPrime, CrossTermError> {
    let eq = |p: &PointSet| Equilibrium::new(p, table, &cfg.solve);
    let e1: Vec<Equilibrium> = blocks(s1, b)?.iter().map(eq).collect::<Result<_, _>>()?;
    let e2: Vec<Equilibrium> = blocks(s2, b)?.iter().map(eq).collect::<Result<_, _>>()?;
    let mut value = 0.0;
    let mut tol = 0.0;
    for x in &e1 {
        for y in &e2 {
            let t = bilinear(&x.set, &x.es, x.tol, &y.set, &y.es, y.tol, table)?;
            value += t.value;
            tol += t.tol;
        }
    }
    let f1 = eq(&s1.range_of(0, s1.len())?)?;
    let f2 = eq(&s2.range_of(0, s2.len())?)?;
    let tl = bilinear(&f1.set, &f1.es, f1.tol, &f2.set, &f2.es, f2.tol, table)?;
    Ok(TlPrime {
        tl_prime: Term { value, tol },
        tl,
        blocks: b,
    })
}
