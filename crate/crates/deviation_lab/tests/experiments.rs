use capacity::{equilibrium_capacity, SolveConfig};
use deviation_lab::stats::mean_se;
use deviation_lab::*;
use lattice_green::{GreenTable, LatticePoint, TableConfig};
use proptest::prelude::*;
use std::f64::consts::PI;
use std::sync::OnceLock;
use walk_sim::{sample_walk, PointSet};

fn table() -> &'static GreenTable {
    static T: OnceLock<GreenTable> = OnceLock::new();
    T.get_or_init(|| {
        GreenTable::build(TableConfig {
            box_radius: 8,
            ..Default::default()
        })
        .unwrap()
    })
}

fn lab() -> Lab<'static> {
    Lab {
        table: table(),
        workers: 1,
    }
}

fn curve(n_list: Vec<usize>, samples: usize, strata: usize, seed: u64) -> CapacityCurve {
    CapacityCurve {
        n_list,
        samples,
        strata,
        escape_factor: 2.0,
        seed,
    }
}

fn row(r: &ExperimentRecord, i: usize) -> (f64, f64) {
    (r.rows[i].y.unwrap(), r.rows[i].err.unwrap())
}

#[test]
fn capacity_mc_matches_exact_solve_at_n64() {
    let r = expected_capacity_curve(&curve(vec![64], 400, 64, 11), &lab()).unwrap();
    let (mc, mc_se) = row(&r, 0);
    let bias = r.rows[0].extra["bias_bound"];
    let exact: Vec<f64> = (0..400)
        .map(|j| {
            let w = sample_walk(64, 9_999, j);
            let a = PointSet::from_points(w.steps[1..].iter().copied());
            equilibrium_capacity(&a, table(), &SolveConfig::default())
                .unwrap()
                .capacity
        })
        .collect();
    let (ex, ex_se) = mean_se(&exact);
    let tol = 3.0 * (mc_se * mc_se + ex_se * ex_se).sqrt() + bias;
    assert!((mc - ex).abs() <= tol, "mc {mc} exact {ex} tol {tol}");
}

#[test]
fn capacity_scale_is_order_one() {
    let r = expected_capacity_curve(&curve(vec![1 << 10, 1 << 12, 1 << 14], 20, 32, 3), &lab())
        .unwrap();
    assert!(r.ok(), "{:?}", r.checks);
    for row in &r.rows {
        let rn = row.extra["r_n"];
        assert!(rn > 0.5 && rn < 2.0, "r(n) = {rn}");
        assert!(row.err.unwrap() > 0.0);
    }
}

#[test]
fn single_sample_replays_identically() {
    let p = curve(vec![256], 1, 16, 5);
    let a = expected_capacity_curve(&p, &lab()).unwrap();
    let b = expected_capacity_curve(&p, &lab()).unwrap();
    assert!(a.same_results(&b));
    assert_eq!(a.experiment_id, b.experiment_id);
}

#[test]
fn every_kind_replays_from_json() {
    let experiments = [
        Experiment::ExpectedCapacity(curve(vec![64, 128], 6, 8, 1)),
        Experiment::Nonintersection(curve(vec![1, 64], 6, 8, 2)),
        Experiment::LowerTail(LowerTail {
            n: 128,
            lambda_grid: vec![0.0, 0.5, 1.0],
            samples: 40,
            max_samples: 80,
            strata: 16,
            kappa: Some(0.3388),
            ..Default::default()
        }),
        Experiment::TlMoments(TlMoments {
            n: 64,
            samples: 4,
            ..Default::default()
        }),
        Experiment::BridgeBound(BridgeBound {
            n_list: vec![64, 128],
            samples: 10,
            ..Default::default()
        }),
    ];
    let two = Lab {
        table: table(),
        workers: 2,
    };
    for e in &experiments {
        let r = lab().run(e).unwrap();
        let back: ExperimentRecord = serde_json::from_str(&r.to_json_line()).unwrap();
        assert_eq!(back, r);
        assert!(lab().replay(&back).unwrap(), "{}", r.experiment_id);
        assert!(two.run(e).unwrap().same_results(&r), "workers changed {}", r.experiment_id);
    }
}

#[test]
fn different_seeds_differ() {
    let a = nonintersection_curve(&curve(vec![256], 8, 16, 1), &lab()).unwrap();
    let b = nonintersection_curve(&curve(vec![256], 8, 16, 2), &lab()).unwrap();
    assert_ne!(a.experiment_id, b.experiment_id);
    assert!(!a.same_results(&b));
}

#[test]
fn standard_error_halves_at_four_times_the_samples() {
    let a = nonintersection_curve(&curve(vec![64], 400, 8, 21), &lab()).unwrap();
    let b = nonintersection_curve(&curve(vec![64], 1600, 8, 21), &lab()).unwrap();
    let ratio = row(&a, 0).1 / row(&b, 0).1;
    assert!((1.8..=2.2).contains(&ratio), "ratio {ratio}");
}

#[test]
fn single_point_nonintersection_is_inverse_green() {
    let r = nonintersection_curve(&curve(vec![1], 20_000, 1, 4), &lab()).unwrap();
    let (p, se) = row(&r, 0);
    let bias = r.rows[0].extra["bias_bound"];
    let exact = 1.0 / table().gd(LatticePoint::ORIGIN).unwrap().value;
    assert!((p - exact).abs() <= 3.0 * se + bias, "{p} vs {exact}");
}

#[test]
fn nonintersection_decreases_with_n() {
    let r = nonintersection_curve(&curve(vec![64, 1024, 16384], 20, 100, 6), &lab()).unwrap();
    assert!(r.check("nonincreasing").unwrap().passed);
    let p: Vec<f64> = (0..3).map(|i| row(&r, i).0).collect();
    assert!(p[0] > p[1] && p[1] > p[2], "{p:?}");
}

#[test]
fn normalized_nonintersection_window_at_1e5() {
    let r = nonintersection_curve(&curve(vec![100_000], 10, 200, 7), &lab()).unwrap();
    let v = r.rows[0].extra["normalized"];
    assert!((0.5..=1.5).contains(&v), "{v}");
    assert!(r.ok());
}

#[test]
fn zero_offset_tail_is_about_one_half() {
    // strata ≥ |A| gives one escape walk per range point
    let r = lower_tail_experiment(
        &LowerTail {
            n: 256,
            lambda_grid: vec![0.0],
            samples: 2000,
            max_samples: 2000,
            strata: 256,
            escape_factor: 2.0,
            kappa: Some(0.3388),
            ..Default::default()
        },
        &lab(),
    )
    .unwrap();
    let p = r.rows[0].extra["tail_probability"];
    let se = r.rows[0].extra["tail_probability_err"];
    assert!((p - 0.5).abs() <= 3.0 * se + 0.02, "P(λ=0) = {p} ± {se}");
}

#[test]
fn lower_tail_rate_is_monotone_and_nearly_linear() {
    let r = lower_tail_experiment(
        &LowerTail {
            n: 4096,
            lambda_grid: vec![0.5, 1.0, 1.5, 2.0, 2.5],
            samples: 1000,
            max_samples: 1000,
            strata: 32,
            escape_factor: 7.0,
            kappa: Some(0.3388),
            ..Default::default()
        },
        &lab(),
    )
    .unwrap();
    assert!(r.check("rate_nondecreasing").unwrap().passed);
    assert!(r.check("rate_linear_correlation").unwrap().passed, "{:?}", r.checks);
    assert!(r.check("bias_budget").unwrap().passed, "{:?}", r.summary);
    let gn = gn_rates(&r);
    assert!(gn.windows(2).all(|w| w[0] < w[1]));
}

fn gn_rates(r: &ExperimentRecord) -> Vec<f64> {
    r.rows.iter().map(|row| row.extra["rate_gn"]).collect()
}

#[test]
fn sparse_tails_grow_the_sample_then_flag() {
    let p = LowerTail {
        n: 64,
        lambda_grid: vec![0.5, 40.0],
        samples: 20,
        max_samples: 80,
        strata: 8,
        kappa: Some(0.3388),
        ..Default::default()
    };
    let r = lower_tail_experiment(&p, &lab()).unwrap();
    assert_eq!(r.summary["samples"], 80.0);
    assert!(r.flags.iter().any(|f| f.contains("lambda=40")));
    assert!(r.rows[1].y.is_none());
    assert!(!r.ok());
}

#[test]
fn lower_tail_parameters_are_validated() {
    let bad = [
        LowerTail {
            lambda_grid: vec![],
            ..Default::default()
        },
        LowerTail {
            lambda_grid: vec![1.0, 0.5],
            ..Default::default()
        },
        LowerTail {
            lambda_grid: vec![-1.0],
            ..Default::default()
        },
        LowerTail {
            samples: 10,
            max_samples: 5,
            ..Default::default()
        },
    ];
    for p in &bad {
        assert!(matches!(lower_tail_experiment(p, &lab()), Err(LabError::Parameter(_))));
    }
}

#[test]
fn curve_parameters_are_validated() {
    for p in [
        curve(vec![], 4, 4, 0),
        curve(vec![0, 4], 4, 4, 0),
        curve(vec![8, 4], 4, 4, 0),
        curve(vec![4], 0, 4, 0),
        curve(vec![4], 4, 0, 0),
    ] {
        assert!(expected_capacity_curve(&p, &lab()).is_err());
        assert!(nonintersection_curve(&p, &lab()).is_err());
    }
}

#[test]
fn tl_prime_dominates_and_moment_constants_agree() {
    let r = tl_moment_check(
        &TlMoments {
            n: 256,
            samples: 40,
            theta: Some(0.5),
            ..Default::default()
        },
        &lab(),
    )
    .unwrap();
    assert_eq!(r.summary["violations"], 0.0);
    assert!(r.check("moment_constants_ratio").unwrap().passed);
    assert_eq!(r.summary["theta"], 0.5);
    assert_eq!(r.rows.len(), 3);
}

#[test]
fn first_moment_scale_is_bounded() {
    for n in [256, 512, 1024] {
        let r = tl_moment_check(
            &TlMoments {
                n,
                m_max: 1,
                samples: 12,
                b_rule: BRule::Fixed(2),
                ..Default::default()
            },
            &lab(),
        )
        .unwrap();
        let s = r.summary["first_moment_scaled"];
        assert!(s > 0.05 && s < 5.0, "n={n}: {s}");
        assert_eq!(r.summary["violations"], 0.0);
    }
}

#[test]
fn tl_budget_and_order_limits() {
    let big = TlMoments {
        n: TL_MAX_N + 1,
        ..Default::default()
    };
    assert!(matches!(tl_moment_check(&big, &lab()), Err(LabError::Budget { .. })));
    let m5 = TlMoments {
        m_max: 5,
        ..Default::default()
    };
    assert!(matches!(tl_moment_check(&m5, &lab()), Err(LabError::Parameter(_))));
    assert_eq!(BRule::LogLog.eval(1 << 12), 2);
    assert_eq!(BRule::Fixed(5).eval(1 << 12), 5);
}

#[test]
fn green_sums_grow_like_log_n() {
    let r = bridge_bound_check(
        &BridgeBound {
            n_list: vec![256, 512, 1024, 2048, 4096],
            samples: 400,
            ..Default::default()
        },
        &lab(),
    )
    .unwrap();
    assert!(r.ok(), "{:?}", r.checks);
    // local CLT: p_m(0) ≈ 4/(π² m²) on average, so E Σ_{i≤n} G_D(S_i) ≈ (4/π²) log n
    let c = r.summary["unconditioned_slope"];
    let err = r.summary["unconditioned_slope_err"];
    let reference = 4.0 / (PI * PI);
    assert!((c - reference).abs() <= 4.0 * err + 0.05 * reference, "{c} ± {err}");
    for row in &r.rows {
        assert!(row.y.unwrap() >= 0.0);
        assert!(row.extra["acceptance_rate"] >= 1e-4);
    }
}

#[test]
fn bridge_acceptance_floor_is_enforced() {
    let p = BridgeBound {
        n_list: vec![1024],
        samples: 5,
        ball_fraction: 0.02,
        acceptance_floor: 0.05,
        seed: 0,
    };
    match bridge_bound_check(&p, &lab()) {
        Err(LabError::BridgeAcceptance { rate, floor, .. }) => assert!(rate < floor),
        other => panic!("expected an acceptance failure, got {other:?}"),
    }
}

proptest! {
    #[test]
    fn tail_rates_are_monotone(
        values in prop::collection::vec(-50.0..50.0f64, 2..200),
        mut grid in prop::collection::vec(0.0..5.0f64, 1..8),
        unit in 0.5..20.0f64,
    ) {
        grid.sort_by(f64::total_cmp);
        let center = values.iter().sum::<f64>() / values.len() as f64;
        let t = tail_rates(&values, center, unit, 2.0, &grid);
        for w in t.windows(2) {
            prop_assert!(w[1].count <= w[0].count);
            if let (Some(a), Some(b)) = (w[0].rate, w[1].rate) {
                prop_assert!(b >= a);
            }
            if w[0].rate.is_none() {
                prop_assert!(w[1].rate.is_none());
            }
        }
        for p in &t {
            prop_assert!((0.0..=1.0).contains(&p.probability));
        }
    }
}
