use lattice_green::{GreenTable, LatticePoint, TableConfig};
use std::sync::OnceLock;
use walk_sim::{PointSet, StepStream};

pub fn table() -> &'static GreenTable {
    static T: OnceLock<GreenTable> = OnceLock::new();
    T.get_or_init(|| {
        GreenTable::build(TableConfig {
            box_radius: 8,
            ..TableConfig::default()
        })
        .unwrap()
    })
}

#[allow(dead_code)]
pub fn random_set(s: &mut StepStream, n: usize, half_width: i32) -> PointSet {
    let w = (2 * half_width + 1) as u64;
    PointSet::from_points((0..n).map(|_| {
        LatticePoint([0; 4].map(|_| s.below(w) as i32 - half_width))
    }))
}

pub fn set(points: &[[i32; 4]]) -> PointSet {
    PointSet::from_points(points.iter().map(|p| LatticePoint(*p)))
}
