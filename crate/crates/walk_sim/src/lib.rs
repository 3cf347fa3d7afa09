//! Seeded simple random walks on Z⁴.
//!
//! Steps come from ChaCha8 keyed by `seed`, with `stream_id` selecting the
//! ChaCha stream, so any stream is reachable without generating the others.
//! Each 64-bit output yields 21 three-bit step codes.

mod io;
mod set;

pub use io::{read_walk, write_walk};
pub use lattice_green::LatticePoint;
pub use set::PointSet;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WalkError {
    #[error("indices a={a}, b={b} invalid for a walk of length {n}")]
    Index { a: usize, b: usize, n: usize },
    #[error("length {n} not divisible by 2^{level}, or k={k} outside 1..=2^{level}")]
    Divisibility { n: usize, level: u32, k: usize },
    #[error("walk file: {0}")]
    Format(String),
}

/// Stream of uniformly distributed step codes in 0..8.
#[derive(Debug, Clone)]
pub struct StepStream {
    rng: ChaCha8Rng,
    word: u64,
    left: u32,
}

impl StepStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            rng,
            word: 0,
            left: 0,
        }
    }

    #[inline]
    pub fn next_code(&mut self) -> u8 {
        if self.left == 0 {
            self.word = self.rng.next_u64();
            self.left = 21;
        }
        let c = (self.word & 7) as u8;
        self.word >>= 3;
        self.left -= 1;
        c
    }

    /// Uniform f64 in [0,1) from the same stream (53 random bits).
    pub fn next_f64(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in 0..n.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let v = self.rng.next_u64();
            if v < zone {
                return v % n;
            }
        }
    }
}

/// Positions S_0..S_n of a walk with its provenance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkPath {
    pub steps: Vec<LatticePoint>,
    pub seed: u64,
    pub stream_id: u64,
}

impl WalkPath {
    /// Number of steps n.
    pub fn len(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn position(&self, i: usize) -> LatticePoint {
        self.steps[i]
    }

    /// Step codes (index into `lattice_green::point::STEPS`).
    pub fn codes(&self) -> Vec<u8> {
        self.steps
            .windows(2)
            .map(|w| {
                let d = w[1] - w[0];
                let axis = d.0.iter().position(|&c| c != 0).expect("not a unit step");
                (2 * axis + usize::from(d.0[axis] < 0)) as u8
            })
            .collect()
    }

    pub fn from_codes(codes: &[u8], seed: u64, stream_id: u64) -> Self {
        let mut steps = Vec::with_capacity(codes.len() + 1);
        let mut p = LatticePoint::ORIGIN;
        steps.push(p);
        for &c in codes {
            p = p.step(c);
            steps.push(p);
        }
        Self {
            steps,
            seed,
            stream_id,
        }
    }

    /// The set {S_a, …, S_b}.
    pub fn range_of(&self, a: usize, b: usize) -> Result<PointSet, WalkError> {
        if a > b || b > self.len() {
            return Err(WalkError::Index {
                a,
                b,
                n: self.len(),
            });
        }
        Ok(PointSet::from_points(self.steps[a..=b].iter().copied()))
    }

    /// S[1,n].
    pub fn range(&self) -> PointSet {
        PointSet::from_points(self.steps[1..].iter().copied())
    }

    /// k-th of 2^l equal portions (1-based k): positions S[(k-1)m, km], m = n/2^l.
    pub fn segment(&self, level: u32, k: usize) -> Result<WalkSlice<'_>, WalkError> {
        let n = self.len();
        let parts = 1usize.checked_shl(level).unwrap_or(0);
        if parts == 0 || n % parts != 0 || k == 0 || k > parts {
            return Err(WalkError::Divisibility { n, level, k });
        }
        let m = n / parts;
        Ok(WalkSlice {
            start: (k - 1) * m,
            positions: &self.steps[(k - 1) * m..=k * m],
        })
    }
}

/// A contiguous stretch of a walk, positions not re-rooted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkSlice<'a> {
    pub start: usize,
    pub positions: &'a [LatticePoint],
}

impl WalkSlice<'_> {
    pub fn len(&self) -> usize {
        self.positions.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> PointSet {
        PointSet::from_points(self.positions.iter().copied())
    }
}

impl RngCore for StepStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// n-step walk from the origin driven by (seed, stream_id).
pub fn sample_walk(n: usize, seed: u64, stream_id: u64) -> WalkPath {
    let mut s = StepStream::new(seed, stream_id);
    let mut steps = Vec::with_capacity(n + 1);
    let mut p = LatticePoint::ORIGIN;
    steps.push(p);
    for _ in 0..n {
        p = p.step(s.next_code());
        steps.push(p);
    }
    WalkPath {
        steps,
        seed,
        stream_id,
    }
}

/// Bytes needed to hold a walk of length n in memory.
pub fn memory_bytes(n: usize) -> usize {
    (n + 1) * std::mem::size_of::<LatticePoint>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_walk() {
        let w = sample_walk(0, 1, 0);
        assert_eq!(w.steps, vec![LatticePoint::ORIGIN]);
        assert!(w.is_empty());
    }

    #[test]
    fn ten_million_steps_fit_in_a_gigabyte() {
        assert!(memory_bytes(10_000_000) < 1 << 30);
    }

    #[test]
    fn segments() {
        let w = sample_walk(8, 3, 0);
        let whole = w.segment(0, 1).unwrap();
        assert_eq!(whole.positions, &w.steps[..]);
        let a = w.segment(1, 1).unwrap();
        let b = w.segment(1, 2).unwrap();
        assert_eq!((a.len(), b.len()), (4, 4));
        assert_eq!(a.positions[4], b.positions[0]);
        assert!(w.segment(4, 1).is_err());
        assert!(w.segment(1, 3).is_err());
        assert!(w.segment(1, 0).is_err());
    }

    #[test]
    fn back_and_forth_range() {
        let w = WalkPath::from_codes(&[0, 1, 0, 1], 0, 0);
        assert_eq!(w.range_of(0, 4).unwrap().len(), 2);
        assert_eq!(w.range_of(1, 1).unwrap().len(), 1);
        assert!(w.range_of(2, 5).is_err());
        assert!(w.range_of(3, 2).is_err());
    }
}
