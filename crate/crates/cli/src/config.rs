//! TOML run configuration.
//!
//! ```toml
//! workers = 1
//!
//! [green]
//! quad_tol = 1e-8
//! series_cutoff_k = 5000
//! box_radius = 16
//! # sqrt_radius = 17
//! # cache = "green_table.bin"
//!
//! [solver]
//! grids = [100, 200, 400]
//! max_iter = 20000
//!
//! [experiments.lower_tail]
//! n = 4096
//! lambda_grid = [0.5, 1.0, 1.5, 2.0, 2.5]
//! b_rule = "log_log"      # or { fixed = 2 }
//!
//! [output]
//! dir = "walklab-out"
//! records = "records.jsonl"
//! ```
//!
//! Every section and key is optional. Unknown keys are rejected. The
//! environment variables `WALKLAB_OUT` and `WALKLAB_GREEN_CACHE` override the
//! output directory and the table cache path; nothing else is read from the
//! environment.

use anyhow::{bail, Context, Result};
use deviation_lab::{BridgeBound, CapacityCurve, LowerTail, TlMoments};
use gn_solver::GnConfig;
use lattice_green::{MissPolicy, TableConfig};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const ENV_OUT: &str = "WALKLAB_OUT";
pub const ENV_GREEN_CACHE: &str = "WALKLAB_GREEN_CACHE";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub workers: usize,
    pub green: GreenSection,
    pub solver: SolverSection,
    pub experiments: ExperimentSection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            workers: 1,
            green: GreenSection::default(),
            solver: SolverSection::default(),
            experiments: ExperimentSection::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreenSection {
    pub quad_tol: f64,
    pub series_cutoff_k: usize,
    pub box_radius: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sqrt_radius: Option<u32>,
    /// Binary table cache; relative paths live under the output directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache: Option<PathBuf>,
}

impl Default for GreenSection {
    fn default() -> Self {
        let t = TableConfig::default();
        Self {
            quad_tol: t.quad_tol,
            series_cutoff_k: t.series_cutoff_k,
            box_radius: t.box_radius,
            sqrt_radius: t.sqrt_radius,
            cache: None,
        }
    }
}

impl GreenSection {
    pub fn table_config(&self) -> TableConfig {
        TableConfig {
            quad_tol: self.quad_tol,
            series_cutoff_k: self.series_cutoff_k,
            box_radius: self.box_radius,
            sqrt_radius: self.sqrt_radius,
            miss_policy: MissPolicy::Asymptotic,
            ..TableConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub grids: Vec<usize>,
    pub r_min: f64,
    pub r_max: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub starts: usize,
    pub seed: u64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let g = GnConfig::default();
        Self {
            grids: g.grids,
            r_min: g.r_min,
            r_max: g.r_max,
            max_iter: g.max_iter,
            tol: g.tol,
            starts: g.starts,
            seed: g.seed,
        }
    }
}

impl SolverSection {
    pub fn gn_config(&self, workers: usize) -> GnConfig {
        GnConfig {
            grids: self.grids.clone(),
            r_min: self.r_min,
            r_max: self.r_max,
            max_iter: self.max_iter,
            tol: self.tol,
            starts: self.starts,
            seed: self.seed,
            workers,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub expected_capacity: CapacityCurve,
    pub nonintersection: CapacityCurve,
    pub lower_tail: LowerTail,
    pub tl_moments: TlMoments,
    pub bridge_bound: BridgeBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Record store file name inside `dir`.
    pub records: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("walklab-out"),
            records: PathBuf::from("records.jsonl"),
        }
    }
}

impl RunConfig {
    /// Parses TOML text; errors carry the line, column and offending key.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| anyhow::anyhow!("{e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.green;
        if !(g.quad_tol > 0.0) {
            bail!("green.quad_tol must be > 0, got {}", g.quad_tol);
        }
        if g.series_cutoff_k < 2 {
            bail!("green.series_cutoff_k must be ≥ 2");
        }
        let s = &self.solver;
        if !(s.tol > 0.0) {
            bail!("solver.tol must be > 0, got {}", s.tol);
        }
        if !(s.r_min > 0.0 && s.r_max > s.r_min) {
            bail!("solver needs 0 < r_min < r_max");
        }
        if s.grids.is_empty() || s.max_iter == 0 || s.starts == 0 {
            bail!("solver.grids, solver.max_iter and solver.starts must be nonempty / positive");
        }
        if self.workers == 0 {
            bail!("workers must be ≥ 1");
        }
        let e = &self.experiments;
        for (name, f) in [
            ("expected_capacity", e.expected_capacity.escape_factor),
            ("nonintersection", e.nonintersection.escape_factor),
            ("lower_tail", e.lower_tail.escape_factor),
        ] {
            if !(f > 0.0) {
                bail!("experiments.{name}.escape_factor must be > 0");
            }
        }
        if !(e.bridge_bound.acceptance_floor > 0.0) {
            bail!("experiments.bridge_bound.acceptance_floor must be > 0");
        }
        if self.output.records.as_os_str().is_empty() {
            bail!("output.records must name a file");
        }
        Ok(())
    }

    /// Applies command-line and environment overrides: flag, then
    /// environment, then file.
    pub fn apply_overrides(&mut self, seed: Option<u64>, workers: Option<usize>, out: Option<PathBuf>) {
        if let Some(s) = seed {
            let e = &mut self.experiments;
            e.expected_capacity.seed = s;
            e.nonintersection.seed = s;
            e.lower_tail.seed = s;
            e.tl_moments.seed = s;
            e.bridge_bound.seed = s;
            self.solver.seed = s;
        }
        if let Some(w) = workers {
            self.workers = w;
        }
        if let Some(d) = out.or_else(|| std::env::var_os(ENV_OUT).map(PathBuf::from)) {
            self.output.dir = d;
        }
        if let Some(c) = std::env::var_os(ENV_GREEN_CACHE) {
            self.green.cache = Some(PathBuf::from(c));
        }
    }

    pub fn records_path(&self) -> PathBuf {
        self.output.dir.join(&self.output.records)
    }

    pub fn cache_path(&self) -> PathBuf {
        let c = self.green.cache.clone().unwrap_or_else(|| PathBuf::from("green_table.bin"));
        if c.is_absolute() {
            c
        } else {
            self.output.dir.join(c)
        }
    }

    /// Creates the output directory and checks that it accepts files.
    pub fn prepare_output(&self) -> Result<()> {
        let d = &self.output.dir;
        std::fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
        let probe = d.join(format!(".walklab-probe-{}", std::process::id()));
        std::fs::write(&probe, b"").with_context(|| format!("{} is not writable", d.display()))?;
        std::fs::remove_file(&probe)?;
        if let Some(p) = self.cache_path().parent() {
            std::fs::create_dir_all(p).with_context(|| format!("creating {}", p.display()))?;
        }
        Ok(())
    }
}
