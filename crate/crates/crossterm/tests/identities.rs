use crossterm::*;
use lattice_green::{GreenTable, LatticePoint, TableConfig};
use proptest::prelude::*;
use std::sync::OnceLock;
use walk_sim::{sample_walk, PointSet};

fn table() -> &'static GreenTable {
    static T: OnceLock<GreenTable> = OnceLock::new();
    T.get_or_init(|| {
        GreenTable::build(TableConfig {
            box_radius: 8,
            sqrt_radius: Some(8),
            ..TableConfig::default()
        })
        .unwrap()
    })
}

fn cfg() -> CrossTermConfig {
    CrossTermConfig::default()
}

fn pt(p: [i32; 4]) -> LatticePoint {
    LatticePoint(p)
}

#[test]
fn decomposition_identity_on_walk_ranges() {
    for k in 0..12 {
        let a = sample_walk(10 + 3 * k, 100 + k as u64, 1).range();
        let b = sample_walk(50 - 2 * k, 200 + k as u64, 2)
            .range()
            .translate(pt([(k % 4) as i32, 1, 0, 0]));
        let r = cross_terms(&a, &b, table(), &cfg()).unwrap();
        assert!(r.identity_holds(), "{r:?}");
        assert!(r.residual.abs() < 1e-10);
        for t in [r.chi, r.tl, r.chi_prime_ab, r.chi_prime_ba] {
            assert!(t.value >= -t.tol);
        }
        assert!(r.tl.value >= r.chi.value / 2.0 - r.tl.tol - r.chi.tol);
    }
}

#[test]
fn chi_is_symmetric() {
    let a = sample_walk(30, 1, 0).range();
    let b = sample_walk(30, 2, 0).range();
    let ab = chi(&a, &b, table(), &cfg()).unwrap();
    let ba = chi(&b, &a, table(), &cfg()).unwrap();
    assert!((ab.value - ba.value).abs() < 1e-12 * ab.value.max(1.0));
}

#[test]
fn empty_sets_give_zero() {
    let a = sample_walk(10, 1, 0).range();
    let e = PointSet::new();
    assert_eq!(chi(&a, &e, table(), &cfg()).unwrap().value, 0.0);
    assert_eq!(chi(&e, &a, table(), &cfg()).unwrap().value, 0.0);
    assert_eq!(tl(&e, &a, table(), &cfg()).unwrap().value, 0.0);
    assert_eq!(chi_prime(&e, &a, table(), &cfg()).unwrap().value, 0.0);
    assert_eq!(splitting_residual(&a, &e, table(), &cfg()).unwrap().value, 0.0);
}

#[test]
fn two_singletons_closed_form() {
    let t = table();
    let g0 = t.gd_value(LatticePoint::ORIGIN).unwrap();
    let x = pt([3, 0, 0, 0]);
    let g3 = t.gd_value(x).unwrap();
    let a = PointSet::from_points([LatticePoint::ORIGIN]);
    let b = PointSet::from_points([x]);
    let r = cross_terms(&a, &b, t, &cfg()).unwrap();
    let eu = 1.0 / (g0 + g3);
    assert!((r.chi.value - 2.0 * eu * g3 / g0).abs() < 1e-14);
    assert!((r.tl.value - g3 / (g0 * g0)).abs() < 1e-14);
    // P^z(avoid {z}, hit {0}) = es_{z}(z) - es_U(z)
    assert!((r.chi_prime_ab.value - g3 / g0 * (1.0 / g0 - eu)).abs() < 1e-14);
    let eps = 2.0 * eu - 2.0 / g0 + r.chi.value;
    assert!((r.capacity_split_epsilon.value - eps).abs() < 1e-14);
}

#[test]
fn singletons_at_distance_ten_have_small_epsilon() {
    let a = PointSet::from_points([LatticePoint::ORIGIN]);
    let b = PointSet::from_points([pt([10, 0, 0, 0])]);
    let r = cross_terms(&a, &b, table(), &cfg()).unwrap();
    assert!(r.capacity_split_epsilon.value.abs() < r.chi.value);
}

#[test]
fn chi_prime_is_third_order_for_far_sets() {
    let a = sample_walk(8, 3, 0).range();
    let b = sample_walk(8, 4, 0).range().translate(pt([1000, 0, 0, 0]));
    let r = cross_terms(&a, &b, table(), &cfg()).unwrap();
    assert!(r.chi_prime_ab.value < 1e-3 * r.tl.value);
    assert!(r.chi_prime_ba.value < 1e-3 * r.tl.value);
}

#[test]
fn epsilon_is_small_next_to_chi_on_average() {
    let mut eps = 0.0;
    let mut chis = 0.0;
    for k in 0..20 {
        let w = sample_walk(100, 500 + k, 0);
        let a = w.range_of(0, 50).unwrap();
        let b = w.range_of(50, 100).unwrap();
        let r = cross_terms(&a, &b, table(), &cfg()).unwrap();
        eps += r.capacity_split_epsilon.value.abs();
        chis += r.chi.value;
    }
    assert!(eps < 0.5 * chis, "{eps} vs {chis}");
}

#[test]
fn split_representation_matches_direct_tl() {
    let t = table();
    let a = sample_walk(20, 11, 0).range();
    let b = sample_walk(20, 12, 0).range();
    let direct = tl(&a, &b, t, &cfg()).unwrap();
    let split = tl_split(&a, &b, t, &SplitConfig::default()).unwrap();
    let diff = (split.value() - direct.value).abs();
    assert!(diff <= split.err() + direct.tol, "{split:?} vs {direct:?}");
    assert!(split.tail < 0.1 * split.box_sum);
}

#[test]
fn split_needs_sqrt_entries() {
    let plain = GreenTable::build(TableConfig {
        box_radius: 2,
        p_steps: 0,
        ..TableConfig::default()
    })
    .unwrap();
    let a = PointSet::from_points([LatticePoint::ORIGIN]);
    assert!(tl_split(&a, &a, &plain, &SplitConfig::default()).is_err());
}

#[test]
fn sl_of_back_and_forth_walk() {
    // S[1,2] = {e₁, 0}: SL = 2 es² (G_D(0) + G_D(e₁)) with es = 1/(G_D(0) + G_D(e₁))
    let t = table();
    let w = walk_sim::WalkPath::from_codes(&[0, 1], 0, 0);
    let r = sl_and_lambda(&w, 1, t, &cfg()).unwrap();
    let g0 = t.gd_value(LatticePoint::ORIGIN).unwrap();
    let g1 = t.gd_value(pt([1, 0, 0, 0])).unwrap();
    assert!((r.sl.value - 2.0 / (g0 + g1)).abs() < 1e-14);
}

#[test]
fn lambda_one_is_chi_of_halves() {
    let t = table();
    let w = sample_walk(64, 4, 0);
    let r = sl_and_lambda(&w, 1, t, &cfg()).unwrap();
    let h1 = w.segment(1, 1).unwrap().range();
    let h2 = w.segment(1, 2).unwrap().range();
    let c = chi(&h1, &h2, t, &cfg()).unwrap();
    assert_eq!(r.lambda.value, c.value);
    assert!(sl_and_lambda(&w, 0, t, &cfg()).is_err());
}

#[test]
fn sl_dominates_bipartition_cross_pairs() {
    let t = table();
    let w = sample_walk(60, 8, 0);
    let s = w.range();
    let r = sl_and_lambda(&w, 2, t, &cfg()).unwrap();
    let sol = capacity::equilibrium_capacity(&s, t, &capacity::SolveConfig::default()).unwrap();
    let (p, q): (Vec<_>, Vec<_>) = s.iter().enumerate().partition(|(i, _)| i % 3 == 0);
    let mut cross = 0.0;
    for (i, x) in &p {
        for (j, y) in &q {
            cross += sol.es[*i] * t.gd_value(**x - **y).unwrap() * sol.es[*j];
        }
    }
    assert!(r.sl.value >= 2.0 * cross);
    assert!(r.sl.value > 0.0);
}

#[test]
fn one_level_splitting_matches_two_set_epsilon() {
    let t = table();
    let w = sample_walk(40, 21, 0);
    let d = splitting_decomposition(&w, 1, t, &cfg()).unwrap();
    let a = w.segment(1, 1).unwrap().range();
    let b = w.segment(1, 2).unwrap().range();
    let e = splitting_residual(&a, &b, t, &cfg()).unwrap();
    assert!((d.epsilon - e.value).abs() < 1e-10);
    let d3 = splitting_decomposition(&w, 3, t, &cfg()).unwrap();
    assert_eq!(d3.segment_capacities.len(), 8);
    assert_eq!(d3.lambdas.len(), 3);
}

#[test]
fn tl_prime_dominates_tl() {
    let t = table();
    for k in 0..6 {
        let s1 = sample_walk(120, 40 + k, 1);
        let s2 = sample_walk(120, 40 + k, 2);
        let r = tl_prime(&s1, &s2, 3, t, &cfg()).unwrap();
        assert!(r.tl_prime.value >= r.tl.value);
    }
}

#[test]
fn b_rule_values() {
    assert_eq!(b_rule(1), 1);
    assert_eq!(b_rule(100), 1);
    assert_eq!(b_rule(4096), 2);
    assert_eq!(b_rule(100_000), 2);
    assert_eq!(b_rule(1 << 30), 3);
}

fn small_set() -> impl Strategy<Value = PointSet> {
    prop::collection::vec(prop::array::uniform4(-3i32..=3), 1..10)
        .prop_map(|v| PointSet::from_points(v.into_iter().map(LatticePoint)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn identity_and_symmetry_on_random_sets(a in small_set(), b in small_set()) {
        let t = table();
        let r = cross_terms(&a, &b, t, &cfg()).unwrap();
        prop_assert!(r.identity_holds());
        let s = cross_terms(&b, &a, t, &cfg()).unwrap();
        prop_assert!((r.chi.value - s.chi.value).abs() < 1e-12);
        prop_assert!((r.chi_prime_ab.value - s.chi_prime_ba.value).abs() < 1e-12);
        prop_assert!(r.chi.value >= -r.chi.tol);
    }
}
