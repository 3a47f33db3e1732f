//! Configurable experiments with CSV tables and JSON summaries, and the
//! acceptance criteria built on them.

pub mod acceptance;
mod runners;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::learn::SamplingDesign;
use crate::systems::System;

pub use runners::run;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    KernelDecay,
    Reproduction,
    QuadBuild,
    QuadVerify,
    EignetCloseness,
    ApproxRate,
    Density,
    LocalRecovery,
    Smoothness,
    Covering,
    Mehler,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Experiment::KernelDecay,
        Experiment::Reproduction,
        Experiment::QuadBuild,
        Experiment::QuadVerify,
        Experiment::EignetCloseness,
        Experiment::ApproxRate,
        Experiment::Density,
        Experiment::LocalRecovery,
        Experiment::Smoothness,
        Experiment::Covering,
        Experiment::Mehler,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::KernelDecay => "kernel_decay",
            Experiment::Reproduction => "reproduction",
            Experiment::QuadBuild => "quad_build",
            Experiment::QuadVerify => "quad_verify",
            Experiment::EignetCloseness => "eignet_closeness",
            Experiment::ApproxRate => "approx_rate",
            Experiment::Density => "density",
            Experiment::LocalRecovery => "local_recovery",
            Experiment::Smoothness => "smoothness",
            Experiment::Covering => "covering",
            Experiment::Mehler => "mehler",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown experiment '{s}'")))
    }
}

/// Node set for rule construction: `random:M`, `equispaced:M` or `exact`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum NodeSpec {
    Random(usize),
    Equispaced(usize),
    Exact,
}

impl FromStr for NodeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("bad node spec '{s}' (expected random:M, equispaced:M or exact)"));
        if s == "exact" {
            return Ok(NodeSpec::Exact);
        }
        let (kind, count) = s.split_once(':').ok_or_else(bad)?;
        let m: usize = count.parse().map_err(|_| bad())?;
        if m == 0 {
            return Err(bad());
        }
        match kind {
            "random" => Ok(NodeSpec::Random(m)),
            "equispaced" => Ok(NodeSpec::Equispaced(m)),
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for NodeSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<NodeSpec> for String {
    fn from(n: NodeSpec) -> String {
        match n {
            NodeSpec::Random(m) => format!("random:{m}"),
            NodeSpec::Equispaced(m) => format!("equispaced:{m}"),
            NodeSpec::Exact => "exact".into(),
        }
    }
}

/// Everything that determines a run. Unset fields take the experiment's
/// defaults.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scales: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
    #[serde(default)]
    pub seed: u64,
    /// Number of seeds (seed, seed+1, …).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes: Option<NodeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Target mesh norm in the covering experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<SamplingDesign>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            system: None,
            n: None,
            scales: None,
            sizes: None,
            seed: 0,
            seeds: None,
            tol: None,
            nodes: None,
            noise: None,
            center: None,
            radius: None,
            trials: None,
            eps: None,
            design: None,
            out: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Overlays the fields present in a JSON object onto `self`.
    pub fn merge_json(&self, text: &str) -> Result<Self> {
        let mut base = serde_json::to_value(self)?;
        let over: serde_json::Value = serde_json::from_str(text)?;
        let (Some(b), Some(o)) = (base.as_object_mut(), over.as_object()) else {
            return Err(Error::InvalidArgument("config file must hold a JSON object".into()));
        };
        for (k, v) in o {
            b.insert(k.clone(), v.clone());
        }
        Ok(serde_json::from_value(base)?)
    }

    /// The configured system, if any.
    pub fn system(&self) -> Result<Option<System>> {
        self.system.as_deref().map(str::parse).transpose()
    }

    /// SHA-256 of the canonical JSON form, ignoring the output path.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        let text = serde_json::to_string(&c).unwrap_or_default();
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub(crate) fn seed_list(&self, default: usize) -> Vec<u64> {
        (0..self.seeds.unwrap_or(default) as u64).map(|i| self.seed + i).collect()
    }
}

/// A CSV cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Num(v) if v.is_finite() => write!(f, "{v:.16e}"),
            Cell::Num(v) if v.is_nan() => write!(f, "nan"),
            Cell::Num(v) => write!(f, "{}", if *v > 0.0 { "inf" } else { "-inf" }),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Text(s) => write!(f, "{s}"),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(if v { "true" } else { "false" }.into())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.into())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Rows of measurements with a header.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Numeric column by name.
    pub fn column(&self, name: &str) -> Vec<f64> {
        let Some(i) = self.columns.iter().position(|c| c == name) else {
            return Vec::new();
        };
        self.rows
            .iter()
            .filter_map(|r| match &r[i] {
                Cell::Num(v) => Some(*v),
                Cell::Int(v) => Some(*v as f64),
                Cell::Text(_) => None,
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|c| c.to_string()).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

/// One pass/fail check inside a summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable bound, e.g. "<= 1e-10".
    pub bound: String,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            bound: format!("<= {bound:e}"),
            passed: value <= bound,
        }
    }

    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            value,
            bound: format!(">= {bound}"),
            passed: value >= bound,
        }
    }

    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Check {
            name: name.into(),
            value,
            bound: format!("in [{lo}, {hi}]"),
            passed: value >= lo && value <= hi,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: Experiment,
    pub passed: bool,
    pub checks: Vec<Check>,
    /// Fitted constants and other reported scalars.
    pub fitted: BTreeMap<String, f64>,
    pub seeds: Vec<u64>,
    pub config_hash: String,
    pub version: String,
    /// Extra notes, e.g. the weighted-class caveat on the line.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub table: Table,
    pub summary: Summary,
    /// Extra files (name, contents) written next to the table.
    pub artifacts: Vec<(String, String)>,
}

impl Outcome {
    pub(crate) fn new(config: &ExperimentConfig, table: Table, checks: Vec<Check>, seeds: Vec<u64>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Outcome {
            table,
            summary: Summary {
                experiment: config.experiment,
                passed,
                checks,
                fitted: BTreeMap::new(),
                seeds,
                config_hash: config.hash(),
                version: VERSION.to_string(),
                notes: Vec::new(),
            },
            artifacts: Vec::new(),
        }
    }

    pub(crate) fn fit(mut self, name: &str, value: f64) -> Self {
        self.summary.fitted.insert(name.into(), value);
        self
    }

    pub fn passed(&self) -> bool {
        self.summary.passed
    }

    pub fn failing(&self) -> Vec<&Check> {
        self.summary.checks.iter().filter(|c| !c.passed).collect()
    }

    /// Writes `<experiment>.csv`, `<experiment>.json` and any artifacts into
    /// `dir`; returns the written paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let name = self.summary.experiment.name();
        let mut written = Vec::new();
        let csv = dir.join(format!("{name}.csv"));
        fs::write(&csv, self.table.to_csv())?;
        written.push(csv);
        let json = dir.join(format!("{name}.json"));
        fs::write(&json, serde_json::to_string_pretty(&self.summary)? + "\n")?;
        written.push(json);
        for (file, text) in &self.artifacts {
            let p = dir.join(file);
            fs::write(&p, text)?;
            written.push(p);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
            let j = serde_json::to_string(&e).unwrap();
            assert_eq!(j, format!("\"{}\"", e.name()));
        }
        assert!("nope".parse::<Experiment>().is_err());
    }

    #[test]
    fn node_specs() {
        assert_eq!("random:400".parse::<NodeSpec>().unwrap(), NodeSpec::Random(400));
        assert_eq!("exact".parse::<NodeSpec>().unwrap(), NodeSpec::Exact);
        assert!("random:x".parse::<NodeSpec>().is_err());
        assert!("grid:3".parse::<NodeSpec>().is_err());
    }

    #[test]
    fn config_merge_and_hash() {
        let mut base = ExperimentConfig::new(Experiment::Reproduction);
        base.n = Some(16.0);
        let merged = base.merge_json(r#"{"system": "sphere2", "seed": 4}"#).unwrap();
        assert_eq!(merged.n, Some(16.0));
        assert_eq!(merged.system.as_deref(), Some("sphere2"));
        assert_eq!(merged.seed, 4);
        assert_ne!(merged.hash(), base.hash());
        let mut moved = merged.clone();
        moved.out = Some("elsewhere".into());
        assert_eq!(moved.hash(), merged.hash());
        assert_eq!(merged.hash().len(), 64);
        assert!(base.merge_json(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn csv_formatting() {
        let mut t = Table::new(&["j", "value", "label"]);
        t.push(vec![3u32.into(), 0.1.into(), "x".into()]);
        t.push(vec![4u32.into(), f64::INFINITY.into(), "y".into()]);
        assert_eq!(t.to_csv(), "j,value,label\n3,1.0000000000000001e-1,x\n4,inf,y\n");
        assert_eq!(t.column("value")[0], 0.1);
    }
}
