use lattice_green::*;
use proptest::prelude::*;
use std::sync::OnceLock;

fn table() -> &'static GreenTable {
    static T: OnceLock<GreenTable> = OnceLock::new();
    T.get_or_init(|| {
        GreenTable::build(TableConfig {
            box_radius: 6,
            sqrt_radius: Some(4),
            series_cutoff_k: 600,
            p_steps: 12,
            p_radius: 3,
            ..TableConfig::default()
        })
        .unwrap()
    })
}

fn point(r: i32) -> impl Strategy<Value = LatticePoint> {
    prop::array::uniform4(-r..=r).prop_map(LatticePoint)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gd_invariant_under_symmetry(z in point(8), perm in Just([0usize,1,2,3]).prop_shuffle(), signs in 0u8..16) {
        let t = table();
        let mut w = [0; 4];
        for i in 0..4 {
            let v = z.0[perm[i]];
            w[i] = if signs >> i & 1 == 1 { -v } else { v };
        }
        let w = LatticePoint(w);
        prop_assert_eq!(t.gd(z).unwrap().value, t.gd(w).unwrap().value);
        prop_assert!(t.gd(z).unwrap().value > 0.0);
        if z.norm_inf() <= 4 {
            prop_assert_eq!(t.gsqrt(z).unwrap().value, t.gsqrt(w).unwrap().value);
        }
    }

    #[test]
    fn p_values_are_probabilities_with_parity(k in 0u32..=12, z in point(3)) {
        let v = table().p(k, z).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
        if (k as i64 + z.norm1()) % 2 == 1 || z.norm1() > k as i64 {
            prop_assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn gd_harmonic_off_origin(z in point(5)) {
        prop_assume!(z != LatticePoint::ORIGIN);
        let t = table();
        let avg: f64 = (0..8u8).map(|c| t.gd(z.step(c)).unwrap().value).sum::<f64>() / 8.0;
        prop_assert!((avg - t.gd(z).unwrap().value).abs() < 1e-9);
    }

    #[test]
    fn transition_rows_sum_to_at_most_one(k in 0usize..40) {
        let e = TransitionEngine::new(64);
        let p = e.prob(k, LatticePoint::ORIGIN).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
    }
}
