//! Seeded Monte Carlo experiments on random walk ranges in Z⁴.
//!
//! Every experiment is a deterministic function of its parameters: walk `j`
//! of curve point `i` is driven by ChaCha stream `(i << 40) | 2j` of the
//! experiment seed and its escape walks by stream `(i << 40) | 2j + 1`.
//! Workers only change how the streams are scheduled; results are merged in
//! index order, so records replay bit for bit.

mod bridge;
mod capacity_runs;
mod moments;
mod record;
pub mod stats;

pub use bridge::{bridge_bound_check, BridgeBound};
pub use capacity_runs::{
    escape_radius, expected_capacity_curve, lower_tail_experiment, nonintersection_curve,
    tail_rates, CapacityCurve, LowerTail, TailPoint,
};
pub use moments::{tl_moment_check, BRule, TlMoments, TL_MAX_N};
pub use record::{
    export_csv, Check, Experiment, ExperimentRecord, Kind, RecordStore, Row, SCHEMA_VERSION,
};

use lattice_green::GreenTable;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("n = {n} exceeds the exact-solver budget {max}")]
    Budget { n: usize, max: usize },
    #[error("bridge acceptance rate {rate:e} below the floor {floor:e} at n = {n}")]
    BridgeAcceptance { n: usize, rate: f64, floor: f64 },
    #[error(transparent)]
    Capacity(#[from] capacity::CapacityError),
    #[error(transparent)]
    CrossTerm(#[from] crossterm::CrossTermError),
    #[error(transparent)]
    Green(#[from] lattice_green::GreenError),
    #[error(transparent)]
    Gn(#[from] gn_solver::GnError),
    #[error("record store: {0}")]
    Io(#[from] std::io::Error),
    #[error("record store line {line}: {msg}")]
    Format { line: usize, msg: String },
}

/// Shared resources for running experiments.
#[derive(Clone, Copy)]
pub struct Lab<'a> {
    pub table: &'a GreenTable,
    pub workers: usize,
}

impl Lab<'_> {
    pub fn run(&self, e: &Experiment) -> Result<ExperimentRecord, LabError> {
        match e {
            Experiment::ExpectedCapacity(p) => expected_capacity_curve(p, self),
            Experiment::Nonintersection(p) => nonintersection_curve(p, self),
            Experiment::LowerTail(p) => lower_tail_experiment(p, self),
            Experiment::TlMoments(p) => tl_moment_check(p, self),
            Experiment::BridgeBound(p) => bridge_bound_check(p, self),
        }
    }

    /// Re-runs the experiment stored in `r` and reports whether every
    /// estimate, check and flag comes out identical.
    pub fn replay(&self, r: &ExperimentRecord) -> Result<bool, LabError> {
        Ok(self.run(&r.experiment)?.same_results(r))
    }

    pub(crate) fn map<T, F>(&self, range: std::ops::Range<u64>, f: F) -> Vec<T>
    where
        F: Fn(u64) -> T + Sync + Send,
        T: Send,
    {
        if self.workers <= 1 {
            return range.map(f).collect();
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .expect("thread pool")
            .install(|| range.into_par_iter().map(f).collect())
    }
}

pub(crate) fn stream(block: usize, index: u64) -> u64 {
    ((block as u64) << 40) | index
}
