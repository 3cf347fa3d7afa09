use proptest::prelude::*;
use walk_sim::*;

#[test]
fn determinism_long_walk() {
    let a = sample_walk(1_000_000, 42, 7);
    let b = sample_walk(1_000_000, 42, 7);
    assert_eq!(a, b);
    let c = sample_walk(1000, 42, 8);
    assert_ne!(&a.steps[..1001], &c.steps[..]);
}

#[test]
fn mean_square_displacement() {
    // E|S_n|² = n; Var(|S_n|²/n) ≈ 2/d·... estimated empirically
    let n = 1000;
    let m = 10_000;
    let vals: Vec<f64> = (0..m)
        .map(|s| sample_walk(n, 99, s).steps[n].norm2_sq() as f64 / n as f64)
        .collect();
    let mean = vals.iter().sum::<f64>() / m as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    let se = (var / m as f64).sqrt();
    assert!((mean - 1.0).abs() < 3.0 * se, "mean {mean} se {se}");
}

#[test]
fn increment_law_uniform() {
    let mut s = StepStream::new(5, 0);
    let mut counts = [0u64; 8];
    let n = 1_000_000u64;
    for _ in 0..n {
        counts[s.next_code() as usize] += 1;
    }
    let p = 1.0 / 8.0;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    for c in counts {
        assert!((c as f64 - n as f64 * p).abs() < 4.0 * sd, "{counts:?}");
    }
}

#[test]
fn streams_are_uncorrelated() {
    let n = 200_000;
    let mut a = StepStream::new(11, 0);
    let mut b = StepStream::new(11, 1);
    let mut agree = 0u64;
    for _ in 0..n {
        agree += u64::from(a.next_code() == b.next_code());
    }
    let p = 1.0 / 8.0;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    assert!((agree as f64 - n as f64 * p).abs() < 4.0 * sd);
}

#[test]
fn export_import_round_trip() {
    let w = sample_walk(1001, 3, 4);
    let mut buf = Vec::new();
    write_walk(&mut buf, &w).unwrap();
    assert_eq!(buf.len(), 32 + (3 * 1001usize).div_ceil(8));
    let r = read_walk(&mut buf.as_slice()).unwrap();
    assert_eq!(r, w);
    buf[0] = b'X';
    assert!(read_walk(&mut buf.as_slice()).is_err());
}

proptest! {
    #[test]
    fn path_invariants(n in 0usize..300, seed: u64, stream in 0u64..1000) {
        let w = sample_walk(n, seed, stream);
        prop_assert_eq!(w.steps[0], LatticePoint::ORIGIN);
        prop_assert_eq!(w.len(), n);
        for p in w.steps.windows(2) {
            prop_assert_eq!((p[1] - p[0]).norm1(), 1);
        }
        let r = w.range();
        prop_assert!(r.len() <= n.max(1));
        prop_assert!(r.points().windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn dyadic_segments_cover_range(l in 0u32..5, seed: u64) {
        let n = 64;
        let w = sample_walk(n, seed, 0);
        let parts = 1usize << l;
        let mut joined = vec![w.steps[0]];
        let mut union = PointSet::new();
        for k in 1..=parts {
            let s = w.segment(l, k).unwrap();
            prop_assert_eq!(s.positions[0], *joined.last().unwrap());
            joined.extend_from_slice(&s.positions[1..]);
            union = union.union(&s.range());
        }
        prop_assert_eq!(&joined, &w.steps);
        prop_assert_eq!(union, w.range_of(0, n).unwrap());
    }
}
