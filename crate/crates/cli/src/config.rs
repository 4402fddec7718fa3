//! Subcommand configuration files.

use std::path::{Path, PathBuf};

use nof1_core::gformula::{CovariateRule, IntervalKind};
use nof1_core::panel::ColumnMap;
use nof1_core::scm::Regime;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::failure::{Classify, Failure};

/// A parsed configuration with its digest and base directory.
pub struct Loaded<T> {
    pub body: T,
    pub raw: toml::Table,
    pub sha256: String,
    pub base: PathBuf,
}

impl<T> Loaded<T> {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }
}

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<Loaded<T>, Failure> {
    let bytes = std::fs::read(path).invalid(&format!("reading {}", path.display()))?;
    let text = String::from_utf8(bytes.clone()).invalid(&format!("{} is not UTF-8", path.display()))?;
    let raw: toml::Table = text.parse().invalid(&format!("parsing {}", path.display()))?;
    let body: T = toml::from_str(&text).invalid(&format!("config {}", path.display()))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded { body, raw, sha256: hex::encode(Sha256::digest(&bytes)), base })
}

fn default_level() -> f64 {
    0.95
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub path: PathBuf,
    #[serde(default)]
    pub columns: ColumnMap,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub seed: Option<u64>,
    /// Structural model in the core TOML schema; read from the raw table.
    #[allow(dead_code)]
    pub model: toml::Table,
    pub t: usize,
    pub regime: Regime,
    #[serde(default = "one")]
    pub individuals: usize,
    /// Fix the latent level by name instead of drawing it from the weights.
    pub u: Option<String>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub seed: Option<u64>,
    #[serde(default = "default_level")]
    pub level: f64,
    pub data: DataSection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseConfig {
    pub seed: Option<u64>,
    pub data: DataSection,
    /// Outcomes within an arm closer than this count as equal.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    1e-12
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Data,
    Model,
    Kernels,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fit {
    #[default]
    Categorical,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evaluation {
    Dp,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StartIndices {
    pub y: usize,
    pub l: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BootstrapSection {
    pub replicates: usize,
    #[serde(default = "normal")]
    pub interval: IntervalKind,
    /// Monte Carlo replicates per bootstrap dataset for Gaussian fits.
    #[serde(default = "default_inner_reps")]
    pub reps: usize,
}

fn normal() -> IntervalKind {
    IntervalKind::Normal
}

fn default_inner_reps() -> usize {
    1_000
}

fn default_reps() -> usize {
    10_000
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GformulaConfig {
    pub seed: Option<u64>,
    #[serde(default = "default_level")]
    pub level: f64,
    pub source: Source,
    pub data: Option<DataSection>,
    #[allow(dead_code)]
    pub model: Option<toml::Table>,
    /// Latent level of `model` to evaluate, by name.
    pub u: Option<String>,
    pub kernels: Option<PathBuf>,
    /// Recursion start for a kernel dump, as level indices.
    #[serde(default)]
    pub start: StartIndices,
    #[serde(default)]
    pub fit: Fit,
    pub covariate: Option<String>,
    #[serde(default)]
    pub covariate_rules: Vec<CovariateRule>,
    #[serde(default)]
    pub smoothing: f64,
    pub k_max: Option<usize>,
    /// Defaults to `dp`, or `mc` for Gaussian fits.
    pub method: Option<Evaluation>,
    #[serde(default = "default_reps")]
    pub reps: usize,
    pub bootstrap: Option<BootstrapSection>,
    /// Write the fitted kernels to `kernels.toml`.
    #[serde(default)]
    pub dump_kernels: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Tau,
    Gformula,
    Parallel,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregateConfig {
    pub seed: Option<u64>,
    #[serde(default = "default_level")]
    pub level: f64,
    /// CSV with columns `id`, `file` and optionally `schedule`.
    pub manifest: PathBuf,
    #[serde(default)]
    pub columns: ColumnMap,
    pub method: Aggregation,
    pub covariate: Option<String>,
    #[serde(default)]
    pub smoothing: f64,
    pub k_max: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    pub seed: Option<u64>,
    /// Subset of criterion ids; all when absent.
    pub criteria: Option<Vec<u8>>,
    pub acne_dir: Option<PathBuf>,
}

/// Flag beats config; some subcommands refuse to run without either.
pub fn resolve_seed(flag: Option<u64>, config: Option<u64>, required: bool) -> Result<Option<u64>, Failure> {
    match flag.or(config) {
        None if required => Err(Failure::invalid("a seed is required: set `seed` in the config or pass --seed")),
        s => Ok(s),
    }
}
