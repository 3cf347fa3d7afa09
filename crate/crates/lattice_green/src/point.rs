use std::ops::{Add, Neg, Sub};

/// A point of Z⁴.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LatticePoint(pub [i32; 4]);

/// The 8 nearest-neighbour steps, indexed by a 3-bit code: axis = code >> 1, sign = code & 1.
pub const STEPS: [[i32; 4]; 8] = [
    [1, 0, 0, 0],
    [-1, 0, 0, 0],
    [0, 1, 0, 0],
    [0, -1, 0, 0],
    [0, 0, 1, 0],
    [0, 0, -1, 0],
    [0, 0, 0, 1],
    [0, 0, 0, -1],
];

impl LatticePoint {
    pub const ORIGIN: LatticePoint = LatticePoint([0; 4]);

    pub const fn new(a: i32, b: i32, c: i32, d: i32) -> Self {
        LatticePoint([a, b, c, d])
    }

    /// Unit vector along `axis` (0-based).
    pub fn unit(axis: usize) -> Self {
        let mut c = [0; 4];
        c[axis] = 1;
        LatticePoint(c)
    }

    pub fn scaled(self, s: i32) -> Self {
        LatticePoint(self.0.map(|c| c * s))
    }

    pub fn step(self, code: u8) -> Self {
        self + LatticePoint(STEPS[code as usize & 7])
    }

    pub fn norm1(&self) -> i64 {
        self.0.iter().map(|&c| (c as i64).abs()).sum()
    }

    pub fn norm_inf(&self) -> i64 {
        self.0.iter().map(|&c| (c as i64).abs()).max().unwrap()
    }

    pub fn norm2_sq(&self) -> i64 {
        self.0.iter().map(|&c| (c as i64) * (c as i64)).sum()
    }

    pub fn norm2(&self) -> f64 {
        (self.norm2_sq() as f64).sqrt()
    }

    pub fn parity(&self) -> u8 {
        (self.norm1() & 1) as u8
    }

    /// Representative of the orbit under the hyperoctahedral group (sign flips
    /// and coordinate permutations): absolute values sorted ascending.
    pub fn canonical(&self) -> [u32; 4] {
        let mut a = self.0.map(|c| c.unsigned_abs());
        a.sort_unstable();
        a
    }

    /// All distinct images of `self` under the 384-element symmetry group.
    pub fn orbit(&self) -> Vec<LatticePoint> {
        const PERMS: [[usize; 4]; 24] = perms4();
        let mut out = Vec::with_capacity(384);
        for p in PERMS.iter() {
            for signs in 0..16u32 {
                let mut c = [0; 4];
                for i in 0..4 {
                    let v = self.0[p[i]];
                    c[i] = if signs >> i & 1 == 1 { -v } else { v };
                }
                out.push(LatticePoint(c));
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn to_continuum(self) -> ContinuumPoint {
        ContinuumPoint(self.0.map(|c| c as f64))
    }
}

const fn perms4() -> [[usize; 4]; 24] {
    let mut out = [[0usize; 4]; 24];
    let mut n = 0;
    let mut a = 0;
    while a < 4 {
        let mut b = 0;
        while b < 4 {
            let mut c = 0;
            while c < 4 {
                if a != b && a != c && b != c && a + b + c >= 3 && a + b + c <= 6 {
                    let d = 6 - a - b - c;
                    out[n] = [a, b, c, d];
                    n += 1;
                }
                c += 1;
            }
            b += 1;
        }
        a += 1;
    }
    out
}

impl Add for LatticePoint {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        LatticePoint([
            self.0[0] + o.0[0],
            self.0[1] + o.0[1],
            self.0[2] + o.0[2],
            self.0[3] + o.0[3],
        ])
    }
}

impl Sub for LatticePoint {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        LatticePoint([
            self.0[0] - o.0[0],
            self.0[1] - o.0[1],
            self.0[2] - o.0[2],
            self.0[3] - o.0[3],
        ])
    }
}

impl Neg for LatticePoint {
    type Output = Self;
    fn neg(self) -> Self {
        LatticePoint(self.0.map(|c| -c))
    }
}

impl From<[i32; 4]> for LatticePoint {
    fn from(c: [i32; 4]) -> Self {
        LatticePoint(c)
    }
}

/// A point of R⁴.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ContinuumPoint(pub [f64; 4]);

impl ContinuumPoint {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        ContinuumPoint([a, b, c, d])
    }

    pub fn unit(axis: usize) -> Self {
        let mut c = [0.0; 4];
        c[axis] = 1.0;
        ContinuumPoint(c)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn scaled(self, s: f64) -> Self {
        ContinuumPoint(self.0.map(|c| c * s))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }
}
