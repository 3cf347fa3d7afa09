use lattice_green::LatticePoint;

/// Finite set of lattice points in lexicographic order without duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct PointSet {
    points: Vec<LatticePoint>,
}

impl PointSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_points<I: IntoIterator<Item = LatticePoint>>(it: I) -> Self {
        let mut points: Vec<_> = it.into_iter().collect();
        points.sort_unstable();
        points.dedup();
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn iter(&self) -> impl Iterator<Item = &LatticePoint> {
        self.points.iter()
    }

    pub fn contains(&self, p: &LatticePoint) -> bool {
        self.points.binary_search(p).is_ok()
    }

    pub fn index_of(&self, p: &LatticePoint) -> Option<usize> {
        self.points.binary_search(p).ok()
    }

    pub fn union(&self, other: &PointSet) -> PointSet {
        PointSet::from_points(self.points.iter().chain(other.points.iter()).copied())
    }

    pub fn difference(&self, other: &PointSet) -> PointSet {
        PointSet {
            points: self
                .points
                .iter()
                .filter(|p| !other.contains(p))
                .copied()
                .collect(),
        }
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.points.iter().all(|p| other.contains(p))
    }

    pub fn translate(&self, z: LatticePoint) -> PointSet {
        // translation preserves lexicographic order
        PointSet {
            points: self.points.iter().map(|&p| p + z).collect(),
        }
    }

    /// Largest Euclidean distance between two members.
    pub fn diameter(&self) -> f64 {
        let mut best = 0i64;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                best = best.max((*a - *b).norm2_sq());
            }
        }
        (best as f64).sqrt()
    }

    /// Centre of the bounding box (rounded) and the largest distance from it.
    pub fn enclosing_ball(&self) -> (LatticePoint, f64) {
        if self.points.is_empty() {
            return (LatticePoint::ORIGIN, 0.0);
        }
        let mut lo = [i32::MAX; 4];
        let mut hi = [i32::MIN; 4];
        for p in &self.points {
            for i in 0..4 {
                lo[i] = lo[i].min(p.0[i]);
                hi[i] = hi[i].max(p.0[i]);
            }
        }
        let c = LatticePoint(std::array::from_fn(|i| {
            ((lo[i] as i64 + hi[i] as i64).div_euclid(2)) as i32
        }));
        let r = self
            .points
            .iter()
            .map(|p| (*p - c).norm2_sq())
            .max()
            .unwrap();
        (c, (r as f64).sqrt())
    }
}

impl FromIterator<LatticePoint> for PointSet {
    fn from_iter<I: IntoIterator<Item = LatticePoint>>(it: I) -> Self {
        PointSet::from_points(it)
    }
}

impl<'a> IntoIterator for &'a PointSet {
    type Item = &'a LatticePoint;
    type IntoIter = std::slice::Iter<'a, LatticePoint>;
    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}
