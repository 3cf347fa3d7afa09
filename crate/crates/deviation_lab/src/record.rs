use crate::{BridgeBound, CapacityCurve, LabError, LowerTail, TlMoments};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    ExpectedCapacity,
    Nonintersection,
    LowerTail,
    TlMoments,
    BridgeBound,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::ExpectedCapacity => "expected_capacity",
            Kind::Nonintersection => "nonintersection",
            Kind::LowerTail => "lower_tail",
            Kind::TlMoments => "tl_moments",
            Kind::BridgeBound => "bridge_bound",
        }
    }
}

/// Parameters (seeds included) that fully determine a record's results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameters", rename_all = "snake_case")]
pub enum Experiment {
    ExpectedCapacity(CapacityCurve),
    Nonintersection(CapacityCurve),
    LowerTail(LowerTail),
    TlMoments(TlMoments),
    BridgeBound(BridgeBound),
}

impl Experiment {
    pub fn kind(&self) -> Kind {
        match self {
            Experiment::ExpectedCapacity(_) => Kind::ExpectedCapacity,
            Experiment::Nonintersection(_) => Kind::Nonintersection,
            Experiment::LowerTail(_) => Kind::LowerTail,
            Experiment::TlMoments(_) => Kind::TlMoments,
            Experiment::BridgeBound(_) => Kind::BridgeBound,
        }
    }

    /// `kind-hash`, with an FNV-1a hash of the serialized parameters.
    pub fn id(&self) -> String {
        let json = serde_json::to_string(self).expect("parameters serialize");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in json.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        format!("{}-{h:016x}", self.kind().name())
    }
}

/// One point of a curve: (x, y ± err) plus named side quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub x: f64,
    pub y: Option<f64>,
    pub err: Option<f64>,
    #[serde(default)]
    pub extra: BTreeMap<String, f64>,
}

impl Row {
    pub fn new(x: f64, y: f64, err: f64) -> Self {
        Self {
            x,
            y: Some(y),
            err: Some(err),
            extra: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, v: f64) -> Self {
        if v.is_finite() {
            self.extra.insert(key.to_string(), v);
        }
        self
    }
}

/// A statistical claim and the tolerance it was judged against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub statistic: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when statistic ≤ tolerance.
    pub fn at_most(name: &str, statistic: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            statistic,
            tolerance,
            passed: statistic <= tolerance,
        }
    }

    /// Passes when statistic ≥ tolerance.
    pub fn at_least(name: &str, statistic: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            statistic,
            tolerance,
            passed: statistic >= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub schema_version: u32,
    pub experiment_id: String,
    pub kind: Kind,
    pub experiment: Experiment,
    pub rows: Vec<Row>,
    pub summary: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub flags: Vec<String>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub code_version: String,
}

impl ExperimentRecord {
    pub(crate) fn new(experiment: Experiment) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            schema_version: SCHEMA_VERSION,
            experiment_id: experiment.id(),
            kind: experiment.kind(),
            experiment,
            rows: Vec::new(),
            summary: BTreeMap::new(),
            checks: Vec::new(),
            flags: Vec::new(),
            timestamp,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub(crate) fn put(&mut self, key: &str, v: f64) {
        if v.is_finite() {
            self.summary.insert(key.to_string(), v);
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// No flags and every check passed.
    pub fn ok(&self) -> bool {
        self.flags.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    /// Equality of everything except the timestamp.
    pub fn same_results(&self, other: &ExperimentRecord) -> bool {
        let mut a = self.clone();
        a.timestamp = other.timestamp;
        a == *other
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

/// Append-only JSON-lines file, one record per line.
#[derive(Debug, Clone)]
pub struct RecordStore {
    path: PathBuf,
}

impl RecordStore {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, r: &ExperimentRecord) -> Result<(), LabError> {
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)?;
        writeln!(f, "{}", r.to_json_line())?;
        Ok(())
    }

    /// All records; a missing file holds none.
    pub fn read_all(&self) -> Result<Vec<ExperimentRecord>, LabError> {
        let f = match File::open(&self.path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(e.into()),
        };
        let mut out = Vec::new();
        for (i, line) in BufReader::new(f).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let v: serde_json::Value = serde_json::from_str(&line).map_err(|e| LabError::Format {
                line: i + 1,
                msg: e.to_string(),
            })?;
            let version = v.get("schema_version").and_then(|s| s.as_u64());
            if version != Some(SCHEMA_VERSION as u64) {
                return Err(LabError::Format {
                    line: i + 1,
                    msg: format!("schema version {version:?}, expected {SCHEMA_VERSION}"),
                });
            }
            out.push(serde_json::from_value(v).map_err(|e| LabError::Format {
                line: i + 1,
                msg: e.to_string(),
            })?);
        }
        Ok(out)
    }
}

/// One CSV line per row: experiment_id,kind,x,y,err followed by the sorted
/// union of extra keys (empty where a row lacks one).
pub fn export_csv(records: &[ExperimentRecord]) -> String {
    let mut keys: Vec<&String> = records
        .iter()
        .flat_map(|r| r.rows.iter().flat_map(|row| row.extra.keys()))
        .collect();
    keys.sort();
    keys.dedup();
    let mut out = String::from("experiment_id,kind,x,y,err");
    for k in &keys {
        out.push(',');
        out.push_str(k);
    }
    out.push('\n');
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for r in records {
        for row in &r.rows {
            out.push_str(&format!(
                "{},{},{},{},{}",
                r.experiment_id,
                r.kind.name(),
                row.x,
                opt(row.y),
                opt(row.err)
            ));
            for k in &keys {
                out.push(',');
                out.push_str(&opt(row.extra.get(*k).copied()));
            }
            out.push('\n');
        }
    }
    out
}
