use crate::CapacityError;
use faer::linalg::solvers::{Llt, Solve};
use faer::{Mat, Par, Side};
use lattice_green::{GreenTable, LatticePoint};
use walk_sim::PointSet;

/// faer splits its kernels by the size of the current rayon pool, which
/// changes the rounding. Results must not depend on the worker count.
fn sequential() {
    faer::set_global_parallelism(Par::Seq);
}

/// Limits for the dense route.
#[derive(Debug, Clone, Copy)]
pub struct SolveConfig {
    pub max_points: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self { max_points: 4000 }
    }
}

/// 𝒢 = [G_D(a - b)]_{a,b ∈ A}.
#[derive(Debug, Clone)]
pub struct GreenMatrix {
    pub points: PointSet,
    pub entries: Mat<f64>,
    /// Largest absolute error of any entry.
    pub tolerance: f64,
}

impl GreenMatrix {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        sequential();
        self.entries
            .self_adjoint_eigenvalues(Side::Lower)
            .expect("symmetric eigenvalue solver failed")[0]
    }

    /// ‖δ𝒢‖₂ bound from the entrywise tolerance.
    pub fn norm_error(&self) -> f64 {
        self.len() as f64 * self.tolerance
    }
}

pub fn green_matrix(
    a: &PointSet,
    table: &GreenTable,
    cfg: &SolveConfig,
) -> Result<GreenMatrix, CapacityError> {
    if a.is_empty() {
        return Err(CapacityError::Empty);
    }
    if a.len() > cfg.max_points {
        return Err(CapacityError::Budget {
            len: a.len(),
            max: cfg.max_points,
        });
    }
    let pts = a.points();
    let n = pts.len();
    let mut m = Mat::<f64>::zeros(n, n);
    let g0 = table.gd_value(LatticePoint::ORIGIN)?;
    for j in 0..n {
        m[(j, j)] = g0;
        for i in j + 1..n {
            let v = table.gd_value(pts[i] - pts[j])?;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(GreenMatrix {
        points: a.clone(),
        entries: m,
        tolerance: table.gd_error_bound(),
    })
}

/// Factorised Green matrix with the equilibrium vector.
pub struct EquilibriumSolution {
    pub matrix: GreenMatrix,
    llt: Llt<f64>,
    /// es(x) = P^x(τ_A = ∞) in the order of `matrix.points`.
    pub es: Vec<f64>,
    pub capacity: f64,
    /// Bound on the error of each es entry.
    pub es_tolerance: f64,
}

impl std::fmt::Debug for EquilibriumSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EquilibriumSolution")
            .field("n", &self.matrix.len())
            .field("capacity", &self.capacity)
            .field("es_tolerance", &self.es_tolerance)
            .finish()
    }
}

pub fn equilibrium_capacity(
    a: &PointSet,
    table: &GreenTable,
    cfg: &SolveConfig,
) -> Result<EquilibriumSolution, CapacityError> {
    let matrix = green_matrix(a, table, cfg)?;
    EquilibriumSolution::from_matrix(matrix)
}

impl EquilibriumSolution {
    pub fn from_matrix(matrix: GreenMatrix) -> Result<Self, CapacityError> {
        let n = matrix.len();
        sequential();
        let llt = matrix
            .entries
            .llt(Side::Lower)
            .map_err(|_| CapacityError::Conditioning {
                row: 0,
                pivot: f64::NAN,
            })?;
        {
            let l = llt.L();
            for i in 0..n {
                let pivot = l[(i, i)] * l[(i, i)];
                if pivot < 0.25 {
                    return Err(CapacityError::Conditioning { row: i, pivot });
                }
            }
        }
        let ones = Mat::<f64>::from_fn(n, 1, |_, _| 1.0);
        let sol = llt.solve(&ones);
        let es: Vec<f64> = (0..n).map(|i| sol[(i, 0)]).collect();
        let capacity = pairwise_sum(&es);
        let resid = &matrix.entries * &sol - &ones;
        let rnorm = resid.norm_l2();
        let es_norm = es.iter().map(|v| v * v).sum::<f64>().sqrt();
        // ‖𝒢⁻¹‖ ≤ 2
        let es_tolerance = 2.0 * (rnorm + matrix.norm_error() * es_norm) + 1e-13;
        Ok(Self {
            matrix,
            llt,
            es,
            capacity,
            es_tolerance,
        })
    }

    pub fn points(&self) -> &PointSet {
        &self.matrix.points
    }

    pub fn capacity_tolerance(&self) -> f64 {
        self.es_tolerance * (self.es.len() as f64).sqrt()
    }

    /// es(x) for x ∈ A.
    pub fn es_at(&self, x: &LatticePoint) -> Option<f64> {
        self.matrix.points.index_of(x).map(|i| self.es[i])
    }

    /// Solves 𝒢 v = rhs.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let b = Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
        sequential();
        let x = self.llt.solve(&b);
        (0..n).map(|i| x[(i, 0)]).collect()
    }

    /// P^y(walk from y avoids A at all positive times).
    pub fn escape_probability(&self, y: LatticePoint, table: &GreenTable) -> Result<f64, CapacityError> {
        let v = if let Some(e) = self.es_at(&y) {
            e
        } else {
            let mut s = 0.0;
            for (c, e) in self.matrix.points.iter().zip(&self.es) {
                s += table.gd_value(y - *c)? * e;
            }
            1.0 - s
        };
        let tol = self.escape_tolerance();
        if v < -tol || v > 1.0 + tol {
            return Err(CapacityError::Tolerance { value: v, tol });
        }
        Ok(v)
    }

    pub fn escape_tolerance(&self) -> f64 {
        let n = self.es.len() as f64;
        let gmax = self.matrix.entries[(0, 0)];
        n * (self.es_tolerance * gmax + self.matrix.tolerance)
    }

    /// G_A(a, b) = Σ_m P^a(S_m = b, S_i ∉ A for 1 ≤ i ≤ m), a ∈ A, via 𝒢 g = [G_D(x - b)].
    pub fn restricted_green(
        &self,
        a: LatticePoint,
        b: LatticePoint,
        table: &GreenTable,
    ) -> Result<f64, CapacityError> {
        let ia = self
            .matrix
            .points
            .index_of(&a)
            .ok_or(CapacityError::NotInSet(a.0))?;
        let rhs = self
            .matrix
            .points
            .iter()
            .map(|x| table.gd_value(*x - b))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.solve(&rhs)[ia])
    }

    /// Column of G_A(·, b) over A.
    pub fn restricted_green_column(
        &self,
        b: LatticePoint,
        table: &GreenTable,
    ) -> Result<Vec<f64>, CapacityError> {
        let rhs = self
            .matrix
            .points
            .iter()
            .map(|x| table.gd_value(*x - b))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.solve(&rhs))
    }
}

/// Escape probability of y from A; 1 for the empty set.
pub fn escape_probability(
    a: &PointSet,
    y: LatticePoint,
    table: &GreenTable,
    cfg: &SolveConfig,
) -> Result<f64, CapacityError> {
    if a.is_empty() {
        return Ok(1.0);
    }
    equilibrium_capacity(a, table, cfg)?.escape_probability(y, table)
}

/// Pairwise (tree) summation: deterministic and accurate.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let (l, r) = v.split_at(v.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}
