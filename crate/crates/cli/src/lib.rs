//! `walklab`: one entry point for the Green tables, capacities, cross terms,
//! the variational solver and the Monte Carlo experiments.
//!
//! Exit status is 0 when every produced record passes its checks, 1 on a
//! tolerance breach or flagged record, and 2 on errors (bad configuration,
//! unreadable inputs, failed solves).

pub mod config;

use anyhow::{bail, Context, Result};
use capacity::{equilibrium_capacity, mc_escape, McEscapeConfig, SolveConfig};
use clap::{Args, Parser, Subcommand};
use config::RunConfig;
use crossterm::{cross_terms, CrossTermConfig};
use deviation_lab::{export_csv, Experiment, ExperimentRecord, Lab, RecordStore};
use lattice_green::convolution::sqrt_convolution_check;
use lattice_green::table::canonical_orbits;
use lattice_green::{GreenTable, LatticePoint};
use serde_json::json;
use std::io::Write;
use std::path::{Path, PathBuf};
use walk_sim::{sample_walk, PointSet};

#[derive(Debug, Parser)]
#[command(name = "walklab", version, about = "Capacity of random walk ranges in Z^4")]
pub struct Cli {
    /// TOML configuration file; defaults apply when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    /// Output directory (also settable through WALKLAB_OUT).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build or load the Green table; writes green.json.
    Green(GreenArgs),
    /// Capacity of a point set; appends to capacity.jsonl.
    Capacity {
        #[command(subcommand)]
        mode: CapacityMode,
    },
    /// Cross terms χ, TL, χ′ of two sets; writes crossterm.json.
    Crossterm(CrosstermArgs),
    /// Variational constant.
    Gn {
        #[command(subcommand)]
        cmd: GnCommand,
    },
    /// Monte Carlo experiments; records go to the record store.
    Experiment {
        #[command(subcommand)]
        cmd: ExperimentCommand,
    },
    /// Summary CSV, per-experiment tables and (x, y, err) plot files.
    Report,
}

#[derive(Debug, Args)]
pub struct GreenArgs {
    /// Extra displacement to evaluate, as a,b,c,d. Repeatable.
    #[arg(long = "point", value_parser = parse_point)]
    pub points: Vec<LatticePoint>,
    /// Check G̃_D ⋆ G̃_D = G_D on |z|_∞ ≤ --convolution-z (needs green.sqrt_radius).
    #[arg(long)]
    pub convolution: bool,
    #[arg(long, default_value_t = 3)]
    pub convolution_z: u32,
    /// Half-width of the summation box; defaults to sqrt_radius − convolution_z.
    #[arg(long)]
    pub convolution_radius: Option<u32>,
    /// Largest residual accepted by the convolution check.
    #[arg(long, default_value_t = 1e-3)]
    pub max_residual: f64,
}

#[derive(Debug, Args)]
pub struct SetSource {
    /// Text file with one point per line (four integers, '#' comments).
    #[arg(long, conflicts_with = "walk")]
    pub set: Option<PathBuf>,
    /// Range of an n-step walk from the origin.
    #[arg(long, value_name = "N")]
    pub walk: Option<usize>,
    /// Random stream of the walk.
    #[arg(long, default_value_t = 0)]
    pub stream: u64,
}

#[derive(Debug, Subcommand)]
pub enum CapacityMode {
    /// Equilibrium solve.
    Exact(SetSource),
    /// Σ_x P^x(escape) with M walks from each point.
    Mc {
        #[command(flatten)]
        source: SetSource,
        /// Walks per point (M).
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        /// Escape radius R; default max(10·diam, 20).
        #[arg(long)]
        radius: Option<f64>,
        /// Step cap L; default 50 R².
        #[arg(long)]
        max_len: Option<u64>,
    },
}

#[derive(Debug, Args)]
pub struct CrosstermArgs {
    #[arg(long, value_name = "FILE", conflicts_with = "walk_a")]
    pub a: Option<PathBuf>,
    #[arg(long, value_name = "FILE", conflicts_with = "walk_b")]
    pub b: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    pub walk_a: Option<usize>,
    #[arg(long, value_name = "N")]
    pub walk_b: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub stream_a: u64,
    #[arg(long, default_value_t = 1)]
    pub stream_b: u64,
}

#[derive(Debug, Subcommand)]
pub enum GnCommand {
    /// Maximise the ratio; writes gn_result.json and gn_profile.csv.
    Solve {
        /// Grid sizes, comma separated.
        #[arg(long, value_delimiter = ',')]
        grids: Option<Vec<usize>>,
        #[arg(long)]
        max_iter: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCommand {
    ExpectedCapacity,
    Nonintersection,
    LowerTail,
    TlMoments,
    BridgeBound,
    /// Re-run stored records and compare bit for bit; writes replay.json.
    Replay {
        /// Only records with this experiment id.
        #[arg(long)]
        id: Option<String>,
    },
}

pub fn parse_point(s: &str) -> Result<LatticePoint, String> {
    let v: Vec<i32> = s
        .split(',')
        .map(|t| t.trim().parse::<i32>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let a: [i32; 4] = v
        .try_into()
        .map_err(|v: Vec<i32>| format!("expected 4 coordinates, got {}", v.len()))?;
    Ok(LatticePoint(a))
}

/// Reads a point set: four integers per line separated by spaces or commas.
pub fn read_set(path: &Path) -> Result<PointSet> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut pts = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let joined = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).collect::<Vec<_>>().join(",");
        let p = parse_point(&joined).map_err(|e| anyhow::anyhow!("{}:{}: {e}", path.display(), i + 1))?;
        pts.push(p);
    }
    Ok(PointSet::from_points(pts))
}

/// Outcome of a successful run.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub breach: bool,
}

/// Loads and validates the configuration, then dispatches. Nothing is
/// written before the configuration is known to be valid.
pub fn run(cli: Cli) -> Result<Outcome> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply_overrides(cli.seed, cli.workers, cli.out.clone());
    cfg.validate()?;
    cfg.prepare_output()?;
    let seed = cli.seed.unwrap_or(0);
    match cli.command {
        Command::Green(a) => green(&cfg, &a),
        Command::Capacity { mode } => capacity_cmd(&cfg, mode, seed),
        Command::Crossterm(a) => crossterm_cmd(&cfg, &a, seed),
        Command::Gn {
            cmd: GnCommand::Solve { grids, max_iter },
        } => gn_solve(&cfg, grids, max_iter),
        Command::Experiment { cmd } => experiment(&cfg, cmd),
        Command::Report => report(&cfg),
    }
}

fn load_table(cfg: &RunConfig) -> Result<GreenTable> {
    let path = cfg.cache_path();
    GreenTable::load_or_build(cfg.green.table_config(), &path)
        .with_context(|| format!("green table cache {}", path.display()))
}

/// Writes through a temporary file so readers never see half a file.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("partial");
    std::fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_json(path: &Path, v: &serde_json::Value) -> Result<()> {
    write_atomic(path, &(serde_json::to_string_pretty(v)? + "\n"))
}

fn green(cfg: &RunConfig, a: &GreenArgs) -> Result<Outcome> {
    let table = load_table(cfg)?;
    let mut values = Vec::new();
    for z in std::iter::once(LatticePoint::ORIGIN).chain(a.points.iter().copied()) {
        let e = table.gd(z)?;
        values.push(json!({ "z": z.0, "value": e.value, "err": e.err }));
    }
    let mut out = json!({
        "box_radius": table.box_radius(),
        "sqrt_radius": table.sqrt_radius(),
        "series_cutoff_k": table.config().series_cutoff_k,
        "quad_tol": table.config().quad_tol,
        "gd_error_bound": table.gd_error_bound(),
        "values": values,
    });
    let mut breach = false;
    if a.convolution {
        let Some(rs) = table.sqrt_radius() else {
            bail!("the convolution check needs green.sqrt_radius in the configuration");
        };
        let radius = match a.convolution_radius {
            Some(r) => r,
            None => rs
                .checked_sub(a.convolution_z)
                .context("green.sqrt_radius is smaller than --convolution-z")?,
        };
        let mut rows = Vec::new();
        let mut worst: f64 = 0.0;
        for c in canonical_orbits(a.convolution_z) {
            let z = LatticePoint(c.map(|v| v as i32));
            let r = sqrt_convolution_check(&table, z, radius)?;
            worst = worst.max(r.residual().abs());
            breach |= !r.within_tolerance();
            rows.push(json!({
                "z": z.0,
                "box_sum": r.box_sum,
                "far_part": r.far_part,
                "far_err": r.far_err,
                "truncation_deficit": r.truncation_deficit,
                "gd": r.gd,
                "residual": r.residual(),
                "tolerance": r.combined_tolerance(),
                "within_tolerance": r.within_tolerance(),
            }));
        }
        breach |= worst > a.max_residual;
        out["convolution"] = json!({
            "summation_radius": radius,
            "max_residual": worst,
            "max_residual_allowed": a.max_residual,
            "orbits": rows,
        });
        println!("convolution: max |residual| = {worst:.3e} (allowed {:.1e})", a.max_residual);
    }
    println!("G_D(0) = {}", table.gd_value(LatticePoint::ORIGIN)?);
    write_json(&cfg.output.dir.join("green.json"), &out)?;
    Ok(Outcome { breach })
}

fn load_source(src: &SetSource, seed: u64) -> Result<(PointSet, serde_json::Value)> {
    match (&src.set, src.walk) {
        (Some(p), _) => Ok((read_set(p)?, json!({ "set": p }))),
        (None, Some(n)) => Ok((
            sample_walk(n, seed, src.stream).range(),
            json!({ "walk": n, "seed": seed, "stream": src.stream }),
        )),
        (None, None) => bail!("give --set FILE or --walk N"),
    }
}

fn append_line(path: &Path, v: &serde_json::Value) -> Result<()> {
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    writeln!(f, "{}", serde_json::to_string(v)?)?;
    Ok(())
}

fn capacity_cmd(cfg: &RunConfig, mode: CapacityMode, seed: u64) -> Result<Outcome> {
    let line = match mode {
        CapacityMode::Exact(src) => {
            let (a, source) = load_source(&src, seed)?;
            let table = load_table(cfg)?;
            let sol = equilibrium_capacity(&a, &table, &SolveConfig::default())?;
            println!("Cap = {} ± {:.1e} (|A| = {})", sol.capacity, sol.capacity_tolerance(), a.len());
            json!({
                "mode": "exact",
                "source": source,
                "size": a.len(),
                "capacity": sol.capacity,
                "capacity_tolerance": sol.capacity_tolerance(),
                "min_eigenvalue": sol.matrix.min_eigenvalue(),
                "es": sol.es,
            })
        }
        CapacityMode::Mc {
            source: src,
            samples,
            radius,
            max_len,
        } => {
            let (a, source) = load_source(&src, seed)?;
            let mut mc = McEscapeConfig::for_set(&a, samples, seed);
            if let Some(r) = radius {
                mc.escape_radius = r;
                mc.max_len = (50.0 * r * r) as u64;
            }
            if let Some(l) = max_len {
                mc.max_len = l;
            }
            mc.workers = cfg.workers;
            let batches = samples.div_ceil(mc.batch);
            let (mut est, mut var, mut bias, mut undecided) = (0.0, 0.0, 0.0, 0u64);
            for (i, x) in a.iter().enumerate() {
                mc.stream_base = i as u64 * batches;
                let r = mc_escape(&a, *x, &mc)?;
                est += r.estimate;
                var += r.std_err * r.std_err;
                bias += r.bias_bound;
                undecided += r.undecided;
            }
            println!("Cap ≈ {est} ± {:.3e} (bias ≤ {bias:.3e}, |A| = {})", var.sqrt(), a.len());
            json!({
                "mode": "mc",
                "source": source,
                "size": a.len(),
                "samples_per_point": samples,
                "escape_radius": mc.escape_radius,
                "max_len": mc.max_len,
                "seed": seed,
                "estimate": est,
                "std_err": var.sqrt(),
                "bias_bound": bias,
                "undecided": undecided,
            })
        }
    };
    append_line(&cfg.output.dir.join("capacity.jsonl"), &line)?;
    Ok(Outcome::default())
}

fn crossterm_cmd(cfg: &RunConfig, a: &CrosstermArgs, seed: u64) -> Result<Outcome> {
    let side = |file: &Option<PathBuf>, walk: Option<usize>, stream: u64, name: &str| -> Result<PointSet> {
        match (file, walk) {
            (Some(p), _) => read_set(p),
            (None, Some(n)) => Ok(sample_walk(n, seed, stream).range()),
            (None, None) => bail!("give --{name} FILE or --walk-{name} N"),
        }
    };
    let sa = side(&a.a, a.walk_a, a.stream_a, "a")?;
    let sb = side(&a.b, a.walk_b, a.stream_b, "b")?;
    let table = load_table(cfg)?;
    let r = cross_terms(&sa, &sb, &table, &CrossTermConfig::default())?;
    let holds = r.identity_holds();
    println!(
        "chi = {:.6e}, TL = {:.6e}, residual = {:.2e} (tolerance {:.2e})",
        r.chi.value, r.tl.value, r.residual, r.identity_tolerance
    );
    let mut v = serde_json::to_value(r)?;
    v["size_a"] = json!(sa.len());
    v["size_b"] = json!(sb.len());
    v["identity_holds"] = json!(holds);
    write_json(&cfg.output.dir.join("crossterm.json"), &v)?;
    Ok(Outcome { breach: !holds })
}

fn gn_solve(cfg: &RunConfig, grids: Option<Vec<usize>>, max_iter: Option<usize>) -> Result<Outcome> {
    let mut g = cfg.solver.gn_config(cfg.workers);
    if let Some(v) = grids {
        g.grids = v;
    }
    if let Some(m) = max_iter {
        g.max_iter = m;
    }
    let r = gn_solver::maximize_ratio(&g)?;
    println!("kappa = {} ({} iterations, converged: {})", r.kappa, r.iterations, r.converged);
    write_json(&cfg.output.dir.join("gn_result.json"), &serde_json::to_value(&r)?)?;
    write_atomic(&cfg.output.dir.join("gn_profile.csv"), &r.profile.to_csv())?;
    Ok(Outcome { breach: !r.converged })
}

fn print_record(r: &ExperimentRecord) {
    println!("{} ({})", r.experiment_id, r.kind.name());
    println!("  {:>12} {:>14} {:>12}", "x", "y", "err");
    for row in &r.rows {
        let f = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.6}"));
        println!("  {:>12} {:>14} {:>12}", row.x, f(row.y), f(row.err));
    }
    for c in &r.checks {
        let verdict = if c.passed { "ok" } else { "FAILED" };
        println!("  check {}: {} vs {} {verdict}", c.name, c.statistic, c.tolerance);
    }
    for f in &r.flags {
        println!("  flag {f}");
    }
}

fn experiment(cfg: &RunConfig, cmd: ExperimentCommand) -> Result<Outcome> {
    let e = &cfg.experiments;
    let exp = match cmd {
        ExperimentCommand::ExpectedCapacity => Experiment::ExpectedCapacity(e.expected_capacity.clone()),
        ExperimentCommand::Nonintersection => Experiment::Nonintersection(e.nonintersection.clone()),
        ExperimentCommand::LowerTail => Experiment::LowerTail(e.lower_tail.clone()),
        ExperimentCommand::TlMoments => Experiment::TlMoments(e.tl_moments.clone()),
        ExperimentCommand::BridgeBound => Experiment::BridgeBound(e.bridge_bound.clone()),
        ExperimentCommand::Replay { id } => return replay(cfg, id),
    };
    let table = load_table(cfg)?;
    let lab = Lab {
        table: &table,
        workers: cfg.workers,
    };
    let rec = lab.run(&exp)?;
    RecordStore::new(cfg.records_path()).append(&rec)?;
    print_record(&rec);
    Ok(Outcome { breach: !rec.ok() })
}

fn replay(cfg: &RunConfig, id: Option<String>) -> Result<Outcome> {
    let records = RecordStore::new(cfg.records_path()).read_all()?;
    let chosen: Vec<_> = records
        .iter()
        .filter(|r| id.as_ref().is_none_or(|i| &r.experiment_id == i))
        .collect();
    if chosen.is_empty() {
        bail!("no matching records in {}", cfg.records_path().display());
    }
    let table = load_table(cfg)?;
    let lab = Lab {
        table: &table,
        workers: cfg.workers,
    };
    let mut results = Vec::new();
    let mut all = true;
    for r in chosen {
        let same = lab.replay(r)?;
        all &= same;
        println!("{} {}", r.experiment_id, if same { "identical" } else { "DIFFERS" });
        results.push(json!({ "experiment_id": r.experiment_id, "identical": same }));
    }
    write_json(&cfg.output.dir.join("replay.json"), &json!(results))?;
    Ok(Outcome { breach: !all })
}

fn report(cfg: &RunConfig) -> Result<Outcome> {
    let records = RecordStore::new(cfg.records_path()).read_all()?;
    let dir = &cfg.output.dir;
    write_atomic(&dir.join("summary.csv"), &export_csv(&records))?;
    let plots = dir.join("plots");
    std::fs::create_dir_all(&plots)?;
    for r in &records {
        let mut s = String::from("# x y err\n");
        for row in &r.rows {
            let f = |v: Option<f64>| v.map_or("nan".to_string(), |v| format!("{v:e}"));
            s += &format!("{:e} {} {}\n", row.x, f(row.y), f(row.err));
        }
        write_atomic(&plots.join(format!("{}.dat", r.experiment_id)), &s)?;
        print_record(r);
    }
    println!("{} records", records.len());
    Ok(Outcome::default())
}
