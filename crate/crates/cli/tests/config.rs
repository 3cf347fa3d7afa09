use cli::config::RunConfig;
use deviation_lab::BRule;
use proptest::prelude::*;
use std::path::PathBuf;

#[test]
fn default_round_trips() {
    let c = RunConfig::default();
    let text = c.to_toml();
    assert_eq!(RunConfig::from_toml(&text).unwrap(), c);
    assert_eq!(RunConfig::from_toml("").unwrap(), c);
}

#[test]
fn partial_sections_keep_defaults() {
    let c = RunConfig::from_toml("[experiments.lower_tail]\nn = 100000\nb_rule = { fixed = 2 }\n").unwrap();
    assert_eq!(c.experiments.lower_tail.n, 100_000);
    assert_eq!(c.experiments.lower_tail.b_rule, BRule::Fixed(2));
    assert_eq!(c.experiments.lower_tail.lambda_grid, RunConfig::default().experiments.lower_tail.lambda_grid);
}

#[test]
fn parse_errors_locate_the_problem() {
    let e = RunConfig::from_toml("workers = 1\n[green]\nbox_radius = \"big\"\n").unwrap_err();
    let msg = format!("{e:#}");
    assert!(msg.contains("line 3"), "{msg}");
    assert!(msg.contains("box_radius"), "{msg}");
    let e = RunConfig::from_toml("[output]\ndirectory = \"x\"\n").unwrap_err();
    assert!(format!("{e:#}").contains("directory"));
}

#[test]
fn invariants_are_enforced() {
    for bad in [
        "[green]\nquad_tol = 0.0\n",
        "[solver]\ntol = -1e-3\n",
        "[solver]\nr_min = 2.0\nr_max = 1.0\n",
        "workers = 0\n",
        "[experiments.bridge_bound]\nacceptance_floor = 0.0\n",
    ] {
        assert!(RunConfig::from_toml(bad).is_err(), "{bad}");
    }
}

#[test]
fn relative_cache_lives_under_output_directory() {
    let mut c = RunConfig::default();
    c.output.dir = PathBuf::from("/tmp/w");
    assert_eq!(c.cache_path(), PathBuf::from("/tmp/w/green_table.bin"));
    c.green.cache = Some(PathBuf::from("/var/cache/g.bin"));
    assert_eq!(c.cache_path(), PathBuf::from("/var/cache/g.bin"));
}

#[test]
fn seed_flag_reaches_every_experiment() {
    let mut c = RunConfig::default();
    c.apply_overrides(Some(77), Some(3), Some(PathBuf::from("o")));
    let e = &c.experiments;
    for s in [
        e.expected_capacity.seed,
        e.nonintersection.seed,
        e.lower_tail.seed,
        e.tl_moments.seed,
        e.bridge_bound.seed,
        c.solver.seed,
    ] {
        assert_eq!(s, 77);
    }
    assert_eq!(c.workers, 3);
    assert_eq!(c.output.dir, PathBuf::from("o"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn arbitrary_configs_round_trip(
        quad_tol in 1e-14f64..1e-2,
        box_radius in 1u32..40,
        sqrt_radius in proptest::option::of(1u32..40),
        grids in proptest::collection::vec(10usize..2000, 1..5),
        n_list in proptest::collection::vec(1usize..1_000_000, 1..6),
        lambdas in proptest::collection::vec(0.0f64..10.0, 1..8),
        seed in any::<u64>(),
        fixed in proptest::option::of(1usize..50),
        kappa in proptest::option::of(0.01f64..10.0),
        workers in 1usize..16,
    ) {
        let mut c = RunConfig::default();
        c.workers = workers;
        c.green.quad_tol = quad_tol;
        c.green.box_radius = box_radius;
        c.green.sqrt_radius = sqrt_radius;
        c.solver.grids = grids;
        c.experiments.expected_capacity.n_list = n_list;
        c.experiments.expected_capacity.seed = seed;
        c.experiments.lower_tail.lambda_grid = lambdas;
        c.experiments.lower_tail.kappa = kappa;
        c.experiments.lower_tail.b_rule = fixed.map_or(BRule::LogLog, BRule::Fixed);
        c.experiments.tl_moments.theta = kappa;
        let back = RunConfig::from_toml(&c.to_toml()).unwrap();
        prop_assert_eq!(back, c);
    }
}
