use crate::CrossTermError;
use capacity::{equilibrium_capacity, pairwise_sum, SolveConfig};
use lattice_green::{GreenTable, LatticePoint};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use walk_sim::PointSet;

#[derive(Debug, Clone, Copy, Default)]
pub struct CrossTermConfig {
    pub solve: SolveConfig,
}

/// A computed quantity with an absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub value: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossTermReport {
    pub chi: Term,
    pub tl: Term,
    pub chi_prime_ab: Term,
    pub chi_prime_ba: Term,
    /// χ - (2TL - χ'(A,B) - χ'(B,A)).
    pub residual: f64,
    /// Ten times the accumulated tolerance of the four terms.
    pub identity_tolerance: f64,
    /// Cap(A∪B) - Cap(A) - Cap(B) + χ.
    pub capacity_split_epsilon: Term,
    pub cap_a: f64,
    pub cap_b: f64,
    pub cap_union: f64,
}

impl CrossTermReport {
    pub fn identity_holds(&self) -> bool {
        self.residual.abs() <= self.identity_tolerance
    }
}

/// Escape probabilities of a set; the empty set has none and capacity 0.
pub(crate) struct Equilibrium {
    pub set: PointSet,
    pub es: Vec<f64>,
    pub tol: f64,
    pub capacity: f64,
    sol: Option<capacity::EquilibriumSolution>,
}

impl Equilibrium {
    pub fn new(set: &PointSet, table: &GreenTable, cfg: &SolveConfig) -> Result<Self, CrossTermError> {
        if set.is_empty() {
            return Ok(Self {
                set: set.clone(),
                es: Vec::new(),
                tol: 0.0,
                capacity: 0.0,
                sol: None,
            });
        }
        let sol = equilibrium_capacity(set, table, cfg)?;
        Ok(Self {
            set: set.clone(),
            es: sol.es.clone(),
            tol: sol.es_tolerance,
            capacity: sol.capacity,
            sol: Some(sol),
        })
    }

    pub fn cap_tol(&self) -> f64 {
        self.sol.as_ref().map_or(0.0, |s| s.capacity_tolerance())
    }

    /// es restricted to `sub` ⊂ set.
    pub fn on(&self, sub: &PointSet) -> Vec<f64> {
        sub.iter()
            .map(|x| self.es[self.set.index_of(x).expect("subset")])
            .collect()
    }

    /// h(z) = Σ_{x ∈ other \ set} G_set(z, x) es_U(x) for z in the set, i.e.
    /// P^z(avoid set, hit other) via the last visit to `other`.
    pub fn hitting_via_restricted_green(
        &self,
        other: &PointSet,
        union: &Equilibrium,
        table: &GreenTable,
    ) -> Result<(Vec<f64>, f64), CrossTermError> {
        let Some(sol) = &self.sol else {
            return Ok((Vec::new(), 0.0));
        };
        let outside = other.difference(&self.set);
        let es_u = union.on(&outside);
        let mut rhs = vec![0.0; self.set.len()];
        for (r, z) in rhs.iter_mut().zip(self.set.iter()) {
            let terms = outside
                .iter()
                .zip(&es_u)
                .map(|(x, e)| Ok(table.gd_value(*z - *x)? * e))
                .collect::<Result<Vec<_>, CrossTermError>>()?;
            *r = pairwise_sum(&terms);
        }
        let h = sol.solve(&rhs);
        let g0 = table.gd_value(LatticePoint::ORIGIN)?;
        let dr = outside.len() as f64 * (table.gd_error_bound() + g0 * union.tol);
        let tol = 2.0 * (self.set.len() as f64).sqrt() * dr + 1e-13;
        Ok((h, tol))
    }
}

/// Σ_{y∈A, z∈B} u(y) G_D(y - z) v(z) with per-entry error bounds du, dv.
pub(crate) fn bilinear(
    a: &PointSet,
    u: &[f64],
    du: f64,
    b: &PointSet,
    v: &[f64],
    dv: f64,
    table: &GreenTable,
) -> Result<Term, CrossTermError> {
    if a.is_empty() || b.is_empty() {
        return Ok(Term { value: 0.0, tol: 0.0 });
    }
    let rows = a
        .points()
        .par_iter()
        .zip(u.par_iter())
        .map(|(y, uy)| {
            let mut vals = Vec::with_capacity(b.len());
            let mut gsum = 0.0;
            for (z, vz) in b.iter().zip(v) {
                let g = table.gd_value(*y - *z)?;
                vals.push(g * vz);
                gsum += g;
            }
            Ok((uy * pairwise_sum(&vals), gsum))
        })
        .collect::<Result<Vec<(f64, f64)>, CrossTermError>>()?;
    let value = pairwise_sum(&rows.iter().map(|r| r.0).collect::<Vec<_>>());
    let gsum: f64 = rows.iter().map(|r| r.1).sum();
    let umax = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let l1 = |w: &[f64]| w.iter().map(|x| x.abs()).sum::<f64>();
    let tol = gsum * (du * vmax + dv * umax + du * dv)
        + table.gd_error_bound() * l1(u) * l1(v)
        + 1e-15 * value.abs() * (a.len() * b.len()) as f64;
    Ok(Term { value, tol })
}

struct Solved {
    a: Equilibrium,
    b: Equilibrium,
    u: Equilibrium,
}

impl Solved {
    fn new(a: &PointSet, b: &PointSet, table: &GreenTable, cfg: &CrossTermConfig) -> Result<Self, CrossTermError> {
        Ok(Self {
            a: Equilibrium::new(a, table, &cfg.solve)?,
            b: Equilibrium::new(b, table, &cfg.solve)?,
            u: Equilibrium::new(&a.union(b), table, &cfg.solve)?,
        })
    }

    fn tl(&self, table: &GreenTable) -> Result<Term, CrossTermError> {
        bilinear(&self.a.set, &self.a.es, self.a.tol, &self.b.set, &self.b.es, self.b.tol, table)
    }

    fn chi(&self, table: &GreenTable) -> Result<Term, CrossTermError> {
        let (a, b, u) = (&self.a, &self.b, &self.u);
        if a.set.is_empty() || b.set.is_empty() {
            return Ok(Term { value: 0.0, tol: 0.0 });
        }
        let first = bilinear(&a.set, &u.on(&a.set), u.tol, &b.set, &b.es, b.tol, table)?;
        let second = bilinear(&a.set, &a.es, a.tol, &b.set, &u.on(&b.set), u.tol, table)?;
        Ok(Term {
            value: first.value + second.value,
            tol: first.tol + second.tol,
        })
    }

    /// χ'(A,B) when `swap` is false, χ'(B,A) otherwise.
    fn chi_prime(&self, swap: bool, table: &GreenTable) -> Result<Term, CrossTermError> {
        let (a, b) = if swap { (&self.b, &self.a) } else { (&self.a, &self.b) };
        if a.set.is_empty() || b.set.is_empty() {
            return Ok(Term { value: 0.0, tol: 0.0 });
        }
        let (h, dh) = b.hitting_via_restricted_green(&a.set, &self.u, table)?;
        bilinear(&a.set, &a.es, a.tol, &b.set, &h, dh, table)
    }
}

pub fn chi(a: &PointSet, b: &PointSet, table: &GreenTable, cfg: &CrossTermConfig) -> Result<Term, CrossTermError> {
    Solved::new(a, b, table, cfg)?.chi(table)
}

pub fn tl(a: &PointSet, b: &PointSet, table: &GreenTable, cfg: &CrossTermConfig) -> Result<Term, CrossTermError> {
    if a.is_empty() || b.is_empty() {
        return Ok(Term { value: 0.0, tol: 0.0 });
    }
    let ea = Equilibrium::new(a, table, &cfg.solve)?;
    let eb = Equilibrium::new(b, table, &cfg.solve)?;
    bilinear(a, &ea.es, ea.tol, b, &eb.es, eb.tol, table)
}

pub fn chi_prime(
    a: &PointSet,
    b: &PointSet,
    table: &GreenTable,
    cfg: &CrossTermConfig,
) -> Result<Term, CrossTermError> {
    Solved::new(a, b, table, cfg)?.chi_prime(false, table)
}

/// ε(A,B) = Cap(A∪B) - Cap(A) - Cap(B) + χ(A,B).
pub fn splitting_residual(
    a: &PointSet,
    b: &PointSet,
    table: &GreenTable,
    cfg: &CrossTermConfig,
) -> Result<Term, CrossTermError> {
    if b.is_empty() || a.is_empty() {
        return Ok(Term { value: 0.0, tol: 0.0 });
    }
    let s = Solved::new(a, b, table, cfg)?;
    let c = s.chi(table)?;
    Ok(epsilon(&s, c))
}

fn epsilon(s: &Solved, chi: Term) -> Term {
    Term {
        value: s.u.capacity - s.a.capacity - s.b.capacity + chi.value,
        tol: s.u.cap_tol() + s.a.cap_tol() + s.b.cap_tol() + chi.tol,
    }
}

/// All terms from one set of solves.
pub fn cross_terms(
    a: &PointSet,
    b: &PointSet,
    table: &GreenTable,
    cfg: &CrossTermConfig,
) -> Result<CrossTermReport, CrossTermError> {
    let s = Solved::new(a, b, table, cfg)?;
    let chi = s.chi(table)?;
    let tl = s.tl(table)?;
    let cab = s.chi_prime(false, table)?;
    let cba = s.chi_prime(true, table)?;
    let residual = chi.value - (2.0 * tl.value - cab.value - cba.value);
    let eps = if a.is_empty() || b.is_empty() {
        Term { value: 0.0, tol: 0.0 }
    } else {
        epsilon(&s, chi)
    };
    Ok(CrossTermReport {
        chi,
        tl,
        chi_prime_ab: cab,
        chi_prime_ba: cba,
        residual,
        identity_tolerance: 10.0 * (chi.tol + 2.0 * tl.tol + cab.tol + cba.tol),
        capacity_split_epsilon: eps,
        cap_a: s.a.capacity,
        cap_b: s.b.capacity,
        cap_union: s.u.capacity,
    })
}
