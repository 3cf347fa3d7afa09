//! Memoised G_D, G̃_D and p_k values keyed by lattice-symmetry orbit.

use crate::fourier::{green_d, green_d_far, green_sqrt_bessel, FourierConfig};
use crate::sqrt::green_sqrt_d_cached;
use crate::transition::{PlaneCache, TransitionEngine};
use crate::{Estimate, GreenError, LatticePoint};
use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"LGTB";
pub const FORMAT_VERSION: u32 = 1;

/// What to do when a displacement lies outside the tabulated box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissPolicy {
    Fail,
    /// Evaluate the heat-kernel integral on demand.
    Quadrature,
    /// Far-field expansion with an error coefficient calibrated on the box boundary.
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableConfig {
    pub quad_tol: f64,
    pub series_cutoff_k: usize,
    /// G_D is tabulated exactly for |z|_∞ ≤ box_radius.
    pub box_radius: u32,
    /// G̃_D (step series with cutoff K) is tabulated for |z|_∞ ≤ sqrt_radius; `None` skips it.
    pub sqrt_radius: Option<u32>,
    /// p_k(z) is tabulated for k ≤ p_steps and |z|_∞ ≤ p_radius.
    pub p_steps: u32,
    pub p_radius: u32,
    pub miss_policy: MissPolicy,
}

impl Default for TableConfig {
    fn default() -> Self {
        Self {
            quad_tol: 1e-8,
            series_cutoff_k: 5000,
            box_radius: 16,
            sqrt_radius: None,
            p_steps: 32,
            p_radius: 2,
            miss_policy: MissPolicy::Asymptotic,
        }
    }
}

#[derive(Debug, Clone)]
struct Dense {
    radius: u32,
    value: Vec<f64>,
    err: Vec<f64>,
}

impl Dense {
    fn new(radius: u32) -> Self {
        let n = (radius as usize + 1).pow(4);
        Self {
            radius,
            value: vec![f64::NAN; n],
            err: vec![f64::NAN; n],
        }
    }

    #[inline]
    fn index(&self, a: [u32; 4]) -> Option<usize> {
        let r = self.radius;
        if a.iter().any(|&c| c > r) {
            return None;
        }
        let s = r as usize + 1;
        Some(((a[0] as usize * s + a[1] as usize) * s + a[2] as usize) * s + a[3] as usize)
    }

    fn set_orbit(&mut self, canon: [u32; 4], v: f64, e: f64) {
        for p in LatticePoint(canon.map(|c| c as i32)).orbit() {
            if p.0.iter().all(|&c| c >= 0) {
                let i = self.index(p.0.map(|c| c as u32)).unwrap();
                self.value[i] = v;
                self.err[i] = e;
            }
        }
    }

    #[inline]
    fn get(&self, z: LatticePoint) -> Option<(f64, f64)> {
        let i = self.index(z.0.map(|c| c.unsigned_abs()))?;
        Some((self.value[i], self.err[i]))
    }

    fn orbit_entries(&self) -> Vec<([u32; 4], f64, f64)> {
        canonical_orbits(self.radius)
            .map(|c| {
                let i = self.index(c).unwrap();
                (c, self.value[i], self.err[i])
            })
            .collect()
    }
}

/// Canonical orbit representatives (0 ≤ a ≤ b ≤ c ≤ d ≤ r) in lexicographic order.
pub fn canonical_orbits(r: u32) -> impl Iterator<Item = [u32; 4]> {
    (0..=r).flat_map(move |a| {
        (a..=r).flat_map(move |b| (b..=r).flat_map(move |c| (c..=r).map(move |d| [a, b, c, d])))
    })
}

/// Immutable table of Green's function values.
#[derive(Debug, Clone)]
pub struct GreenTable {
    cfg: TableConfig,
    gd: Dense,
    gsqrt: Option<Dense>,
    p_values: BTreeMap<(u32, [u32; 4]), f64>,
    far_coeff: f64,
}

/// c_D in G̃_D(x) ~ c_D/|x|³.
pub const C_SQRT_LATTICE: f64 = 1.0 / (SQRT_2 * PI * PI);

impl GreenTable {
    pub fn build(cfg: TableConfig) -> Result<Self, GreenError> {
        let fcfg = FourierConfig {
            quad_tol: cfg.quad_tol,
            ..FourierConfig::default()
        };
        let mut gd = Dense::new(cfg.box_radius);
        let mut far_coeff = 0.0f64;
        for c in canonical_orbits(cfg.box_radius) {
            let z = LatticePoint(c.map(|v| v as i32));
            let g = green_d(z, &fcfg)?;
            gd.set_orbit(c, g.value, g.err);
            if c[3] == cfg.box_radius {
                let r6 = (z.norm2_sq() as f64).powi(3);
                far_coeff = far_coeff.max(((g.value - green_d_far(z)).abs() + g.err) * r6);
            }
        }
        let gsqrt = match cfg.sqrt_radius {
            None => None,
            Some(rs) => {
                let engine = TransitionEngine::new(cfg.series_cutoff_k.max(1));
                let mut cache = PlaneCache::default();
                let mut d = Dense::new(rs);
                for c in canonical_orbits(rs) {
                    let z = LatticePoint(c.map(|v| v as i32));
                    let g = green_sqrt_d_cached(z, cfg.series_cutoff_k, &engine, &mut cache)?;
                    d.set_orbit(c, g.value, g.err);
                }
                Some(d)
            }
        };
        let mut p_values = BTreeMap::new();
        if cfg.p_steps > 0 {
            let engine = TransitionEngine::new(cfg.p_steps as usize);
            let mut cache = PlaneCache::default();
            for c in canonical_orbits(cfg.p_radius) {
                let z = LatticePoint(c.map(|v| v as i32));
                let s = engine.series_cached(z, cfg.p_steps as usize, &mut cache)?;
                for (k, v) in s.iter().enumerate() {
                    p_values.insert((k as u32, c), *v);
                }
            }
        }
        Ok(Self {
            cfg,
            gd,
            gsqrt,
            p_values,
            far_coeff: 1.5 * far_coeff,
        })
    }

    /// Loads `path` when it holds a table built with `cfg`, otherwise builds and writes it.
    pub fn load_or_build(cfg: TableConfig, path: &Path) -> Result<Self, GreenError> {
        if let Ok(t) = Self::load(path, cfg.miss_policy) {
            if t.cfg == cfg {
                return Ok(t);
            }
        }
        let t = Self::build(cfg)?;
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        t.save(&tmp)?;
        std::fs::rename(&tmp, path).map_err(|e| GreenError::Cache(e.to_string()))?;
        Ok(t)
    }

    pub fn config(&self) -> &TableConfig {
        &self.cfg
    }

    pub fn box_radius(&self) -> u32 {
        self.cfg.box_radius
    }

    /// Error coefficient C of the far-field expansion, |error| ≤ C/|z|⁶ beyond the box.
    pub fn far_coeff(&self) -> f64 {
        self.far_coeff
    }

    pub fn with_policy(mut self, p: MissPolicy) -> Self {
        self.cfg.miss_policy = p;
        self
    }

    /// G_D(z) with its error.
    pub fn gd(&self, z: LatticePoint) -> Result<Estimate, GreenError> {
        if let Some((v, e)) = self.gd.get(z) {
            return Ok(Estimate::new(v, e));
        }
        match self.cfg.miss_policy {
            MissPolicy::Fail => Err(GreenError::TableMiss(z.0)),
            MissPolicy::Quadrature => green_d(
                z,
                &FourierConfig {
                    quad_tol: self.cfg.quad_tol,
                    ..FourierConfig::default()
                },
            ),
            MissPolicy::Asymptotic => {
                let r6 = (z.norm2_sq() as f64).powi(3);
                Ok(Estimate::new(green_d_far(z), self.far_coeff / r6))
            }
        }
    }

    /// Value-only fast path used for filling matrices.
    #[inline]
    pub fn gd_value(&self, z: LatticePoint) -> Result<f64, GreenError> {
        if let Some(i) = self.gd.index(z.0.map(|c| c.unsigned_abs())) {
            return Ok(self.gd.value[i]);
        }
        if self.cfg.miss_policy == MissPolicy::Asymptotic {
            return Ok(green_d_far(z));
        }
        self.gd(z).map(|e| e.value)
    }

    /// Largest error attached to any value `gd` can return for |z|_∞ ≥ `min_inf`.
    pub fn gd_error_bound(&self) -> f64 {
        let inner = self.gd.err.iter().cloned().fold(0.0, f64::max);
        let r = (self.cfg.box_radius + 1) as f64;
        let outer = match self.cfg.miss_policy {
            MissPolicy::Asymptotic => self.far_coeff / r.powi(6),
            MissPolicy::Quadrature => self.cfg.quad_tol,
            MissPolicy::Fail => 0.0,
        };
        inner.max(outer)
    }

    /// G̃_D(z) with its error (series truncation bound inside the sqrt box).
    pub fn gsqrt(&self, z: LatticePoint) -> Result<Estimate, GreenError> {
        if let Some(d) = &self.gsqrt {
            if let Some((v, e)) = d.get(z) {
                return Ok(Estimate::new(v, e));
            }
        }
        match self.cfg.miss_policy {
            MissPolicy::Fail => Err(GreenError::TableMiss(z.0)),
            MissPolicy::Quadrature => green_sqrt_bessel(
                z,
                &FourierConfig {
                    quad_tol: self.cfg.quad_tol,
                    ..FourierConfig::default()
                },
            ),
            MissPolicy::Asymptotic => {
                if z == LatticePoint::ORIGIN {
                    return Err(GreenError::TableMiss(z.0));
                }
                let r2 = z.norm2_sq() as f64;
                let v = C_SQRT_LATTICE / (r2 * r2.sqrt());
                Ok(Estimate::new(v, 3.0 * v / r2))
            }
        }
    }

    #[inline]
    pub fn gsqrt_value(&self, z: LatticePoint) -> Result<f64, GreenError> {
        if let Some(d) = &self.gsqrt {
            if let Some(i) = d.index(z.0.map(|c| c.unsigned_abs())) {
                return Ok(d.value[i]);
            }
        }
        self.gsqrt(z).map(|e| e.value)
    }

    pub fn sqrt_radius(&self) -> Option<u32> {
        self.gsqrt.as_ref().map(|d| d.radius)
    }

    /// Tabulated p_k(z), if covered.
    pub fn p(&self, k: u32, z: LatticePoint) -> Option<f64> {
        self.p_values.get(&(k, z.canonical())).copied()
    }

    pub fn p_entries(&self) -> impl Iterator<Item = (u32, [u32; 4], f64)> + '_ {
        self.p_values.iter().map(|(&(k, c), &v)| (k, c, v))
    }

    /// (canonical point, value, error) for every tabulated G_D orbit.
    pub fn gd_entries(&self) -> Vec<([u32; 4], f64, f64)> {
        self.gd.orbit_entries()
    }

    pub fn gsqrt_entries(&self) -> Vec<([u32; 4], f64, f64)> {
        self.gsqrt
            .as_ref()
            .map(|d| d.orbit_entries())
            .unwrap_or_default()
    }

    pub fn save(&self, path: &Path) -> Result<(), GreenError> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).map_err(io)?;
        std::fs::write(path, buf).map_err(io)
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(FORMAT_VERSION)?;
        w.write_f64::<LittleEndian>(self.cfg.quad_tol)?;
        w.write_u64::<LittleEndian>(self.cfg.series_cutoff_k as u64)?;
        w.write_u32::<LittleEndian>(self.cfg.box_radius)?;
        w.write_i64::<LittleEndian>(self.cfg.sqrt_radius.map_or(-1, |r| r as i64))?;
        w.write_u32::<LittleEndian>(self.cfg.p_steps)?;
        w.write_u32::<LittleEndian>(self.cfg.p_radius)?;
        w.write_f64::<LittleEndian>(self.far_coeff)?;
        for entries in [self.gd_entries(), self.gsqrt_entries()] {
            w.write_u64::<LittleEndian>(entries.len() as u64)?;
            for (c, v, e) in entries {
                for x in c {
                    w.write_u32::<LittleEndian>(x)?;
                }
                w.write_f64::<LittleEndian>(v)?;
                w.write_f64::<LittleEndian>(e)?;
            }
        }
        w.write_u64::<LittleEndian>(self.p_values.len() as u64)?;
        for (&(k, c), &v) in &self.p_values {
            w.write_u32::<LittleEndian>(k)?;
            for x in c {
                w.write_u32::<LittleEndian>(x)?;
            }
            w.write_f64::<LittleEndian>(v)?;
        }
        Ok(())
    }

    pub fn load(path: &Path, policy: MissPolicy) -> Result<Self, GreenError> {
        let bytes = std::fs::read(path).map_err(io)?;
        Self::read_from(&mut bytes.as_slice(), policy).map_err(io)
    }

    pub fn read_from<R: Read>(r: &mut R, policy: MissPolicy) -> std::io::Result<Self> {
        let bad = |m: &str| std::io::Error::new(std::io::ErrorKind::InvalidData, m.to_string());
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(bad("bad magic"));
        }
        if r.read_u32::<LittleEndian>()? != FORMAT_VERSION {
            return Err(bad("unsupported version"));
        }
        let quad_tol = r.read_f64::<LittleEndian>()?;
        let k = r.read_u64::<LittleEndian>()? as usize;
        let box_radius = r.read_u32::<LittleEndian>()?;
        let sr = r.read_i64::<LittleEndian>()?;
        let p_steps = r.read_u32::<LittleEndian>()?;
        let p_radius = r.read_u32::<LittleEndian>()?;
        let far_coeff = r.read_f64::<LittleEndian>()?;
        let cfg = TableConfig {
            quad_tol,
            series_cutoff_k: k,
            box_radius,
            sqrt_radius: (sr >= 0).then_some(sr as u32),
            p_steps,
            p_radius,
            miss_policy: policy,
        };
        let mut read_dense = |radius: u32| -> std::io::Result<Dense> {
            let n = r.read_u64::<LittleEndian>()? as usize;
            let mut d = Dense::new(radius);
            for _ in 0..n {
                let mut c = [0u32; 4];
                for x in c.iter_mut() {
                    *x = r.read_u32::<LittleEndian>()?;
                }
                let v = r.read_f64::<LittleEndian>()?;
                let e = r.read_f64::<LittleEndian>()?;
                if d.index(c).is_none() {
                    return Err(bad("entry outside declared radius"));
                }
                d.set_orbit(c, v, e);
            }
            if d.value.iter().any(|v| v.is_nan()) {
                return Err(bad("incomplete table"));
            }
            Ok(d)
        };
        let gd = read_dense(box_radius)?;
        let gsqrt = match cfg.sqrt_radius {
            Some(rs) => Some(read_dense(rs)?),
            None => {
                if r.read_u64::<LittleEndian>()? != 0 {
                    return Err(bad("unexpected sqrt entries"));
                }
                None
            }
        };
        let np = r.read_u64::<LittleEndian>()? as usize;
        let mut p_values = BTreeMap::new();
        for _ in 0..np {
            let k = r.read_u32::<LittleEndian>()?;
            let mut c = [0u32; 4];
            for x in c.iter_mut() {
                *x = r.read_u32::<LittleEndian>()?;
            }
            p_values.insert((k, c), r.read_f64::<LittleEndian>()?);
        }
        Ok(Self {
            cfg,
            gd,
            gsqrt,
            p_values,
            far_coeff,
        })
    }
}

fn io(e: std::io::Error) -> GreenError {
    GreenError::Cache(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> TableConfig {
        TableConfig {
            box_radius: 4,
            sqrt_radius: Some(2),
            series_cutoff_k: 400,
            p_steps: 8,
            p_radius: 1,
            ..TableConfig::default()
        }
    }

    #[test]
    fn orbit_count() {
        assert_eq!(canonical_orbits(16).count(), 4845);
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let t = GreenTable::build(small()).unwrap();
        let mut a = Vec::new();
        t.write_to(&mut a).unwrap();
        let u = GreenTable::read_from(&mut a.as_slice(), MissPolicy::Asymptotic).unwrap();
        let mut b = Vec::new();
        u.write_to(&mut b).unwrap();
        assert_eq!(a, b);
        let t2 = GreenTable::build(small()).unwrap();
        let mut c = Vec::new();
        t2.write_to(&mut c).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn miss_policies() {
        let t = GreenTable::build(small()).unwrap();
        let far = LatticePoint::new(9, 0, 0, 0);
        let fail = t.clone().with_policy(MissPolicy::Fail);
        assert_eq!(fail.gd(far), Err(GreenError::TableMiss(far.0)));
        let q = t.clone().with_policy(MissPolicy::Quadrature).gd(far).unwrap();
        let a = t.gd(far).unwrap();
        assert!((q.value - a.value).abs() <= a.err);
    }
}
