//! Experiment configuration: a JSON file, overridden field by field from the
//! command line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use gwrc::laws::{ConductanceLaw, ConductanceLawTable, LawError, OffspringLaw};
use gwrc::tree::{TreeLaws, TreeMode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const DEFAULT_STEPS: u64 = 100_000;
pub const DEFAULT_REPLICAS: u64 = 200;
pub const DEFAULT_SAMPLES: u64 = 50_000;
pub const DEFAULT_TOLERANCE: f64 = 1e-3;
pub const DEFAULT_MAX_DEPTH: u32 = 60;
pub const DEFAULT_CONFIRM_LEVEL: u32 = 30;
pub const DEFAULT_DUMP_DEPTH: u32 = 3;

/// Grid run by `ex1` when none is configured.
pub const DEFAULT_EX1_GRID: [(f64, f64); 5] = [
    (0.1, 10.0),
    (0.01, 100.0),
    (0.001, 1000.0),
    (1e-4, 10.0),
    (0.1, 1000.0),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    Formula,
    Covariance,
    Srw,
    Slowdown,
    Ex1,
    Theta,
    Bounds,
    Stationarity,
    Selfcheck,
    DumpTree,
}

impl Method {
    pub fn is_speed(self) -> bool {
        matches!(self, Method::Direct | Method::Formula | Method::Covariance | Method::Srw)
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Formula => "formula",
            Method::Covariance => "covariance",
            Method::Srw => "srw",
            Method::Slowdown => "slowdown",
            Method::Ex1 => "ex1",
            Method::Theta => "theta",
            Method::Bounds => "bounds",
            Method::Stationarity => "stationarity",
            Method::Selfcheck => "selfcheck",
            Method::DumpTree => "dump-tree",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Deserialize)]
struct OverrideSpec {
    k: u32,
    m: u32,
    #[serde(flatten)]
    law: ConductanceLaw,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConductanceSpec {
    default: ConductanceLaw,
    #[serde(default)]
    overrides: Vec<OverrideSpec>,
}

/// The file as written. Every field but the laws is optional.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    offspring: BTreeMap<String, f64>,
    conductance: ConductanceSpec,
    mode: Option<TreeMode>,
    method: Option<Method>,
    n_steps: Option<u64>,
    replicas: Option<u64>,
    samples: Option<u64>,
    tolerance: Option<f64>,
    max_depth: Option<u32>,
    confirm_level: Option<u32>,
    checkpoint_every: Option<u64>,
    seed: Option<u64>,
    output: Option<PathBuf>,
    format: Option<Format>,
    ex1_grid: Option<Vec<(f64, f64)>>,
    depth: Option<u32>,
    path: Option<Vec<u32>>,
    walks: Option<u64>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub method: Option<Method>,
    pub seed: Option<u64>,
    pub replicas: Option<u64>,
    pub n_steps: Option<u64>,
    pub samples: Option<u64>,
    pub tolerance: Option<f64>,
    pub max_depth: Option<u32>,
    pub confirm_level: Option<u32>,
    pub checkpoint_every: Option<u64>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
    pub ex1_grid: Option<Vec<(f64, f64)>>,
    pub depth: Option<u32>,
    pub path: Option<Vec<u32>>,
    pub walks: Option<u64>,
    pub mode: Option<TreeMode>,
}

/// Validated experiment settings. The seed is always concrete: drawn from
/// entropy when not given, and echoed in every output.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub laws: Arc<TreeLaws>,
    pub mode: TreeMode,
    pub method: Method,
    pub n_steps: u64,
    pub replicas: u64,
    pub samples: u64,
    pub tolerance: f64,
    pub max_depth: u32,
    pub confirm_level: u32,
    pub checkpoint_every: Option<u64>,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub ex1_grid: Vec<(f64, f64)>,
    pub depth: u32,
    pub path: Vec<u32>,
    pub walks: u64,
}

/// The part of the configuration that determines results, in a stable
/// serialization. Output path, format and worker count are left out.
#[derive(Debug, Clone, Serialize)]
pub struct EffectiveConfig {
    pub offspring: BTreeMap<u32, f64>,
    pub conductance: EffectiveConductance,
    pub mode: TreeMode,
    pub method: Method,
    pub n_steps: u64,
    pub replicas: u64,
    pub samples: u64,
    pub tolerance: f64,
    pub max_depth: u32,
    pub confirm_level: u32,
    pub checkpoint_every: Option<u64>,
    pub ex1_grid: Vec<(f64, f64)>,
    pub depth: u32,
    pub path: Vec<u32>,
    pub walks: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EffectiveConductance {
    pub default: ConductanceLaw,
    pub overrides: Vec<EffectiveOverride>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EffectiveOverride {
    pub k: u32,
    pub m: u32,
    #[serde(flatten)]
    pub law: ConductanceLaw,
}

impl ExperimentConfig {
    pub fn effective(&self) -> EffectiveConfig {
        EffectiveConfig {
            offspring: self.laws.offspring.atoms().iter().copied().collect(),
            conductance: EffectiveConductance {
                default: *self.laws.table.default_law(),
                overrides: self
                    .laws
                    .table
                    .overrides()
                    .map(|((k, m), law)| EffectiveOverride { k, m, law: *law })
                    .collect(),
            },
            mode: self.mode,
            method: self.method,
            n_steps: self.n_steps,
            replicas: self.replicas,
            samples: self.samples,
            tolerance: self.tolerance,
            max_depth: self.max_depth,
            confirm_level: self.confirm_level,
            checkpoint_every: self.checkpoint_every,
            ex1_grid: self.ex1_grid.clone(),
            depth: self.depth,
            path: self.path.clone(),
            walks: self.walks,
        }
    }

    /// SHA-256 of the effective configuration, hex encoded.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.effective()).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

fn law_error(field: impl Into<String>, source: LawError) -> CliError {
    CliError::Law {
        field: field.into(),
        source,
    }
}

fn parse_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_str(&text)
}

fn parse_str(text: &str) -> Result<FileConfig, CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        CliError::Parse {
            field,
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
        }
    })
}

fn build_laws(file: &FileConfig) -> Result<TreeLaws, CliError> {
    let mut atoms = Vec::with_capacity(file.offspring.len());
    for (key, &p) in &file.offspring {
        let k: u32 = key.trim().parse().map_err(|_| CliError::Parse {
            field: format!("offspring.{key}"),
            line: 0,
            column: 0,
            message: format!("offspring key {key:?} is not a non-negative integer"),
        })?;
        if k == 0 && p > 0.0 {
            return Err(law_error("offspring.0", LawError::ZeroNotAllowed(p)));
        }
        atoms.push((k, p));
    }
    let offspring = OffspringLaw::new(atoms).map_err(|e| law_error("offspring", e))?;
    let mut table = ConductanceLawTable::new(file.conductance.default)
        .map_err(|e| law_error("conductance.default", e))?;
    for (i, o) in file.conductance.overrides.iter().enumerate() {
        table = table
            .with_override(o.k, o.m, o.law)
            .map_err(|e| law_error(format!("conductance.overrides[{i}]"), e))?;
    }
    Ok(TreeLaws::new(offspring, table))
}

fn positive(field: &str, value: u64) -> Result<u64, CliError> {
    if value == 0 {
        return Err(CliError::InvalidConfig(format!("{field} must be >= 1")));
    }
    Ok(value)
}

/// Reads `path` (if any), applies `flags`, validates and fills defaults.
pub fn parse_config(path: Option<&Path>, flags: &Overrides) -> Result<ExperimentConfig, CliError> {
    let path = path.ok_or_else(|| CliError::InvalidConfig("--config is required".into()))?;
    resolve(parse_file(path)?, flags)
}

/// Same as [`parse_config`] for a configuration held in memory.
pub fn parse_config_str(text: &str, flags: &Overrides) -> Result<ExperimentConfig, CliError> {
    resolve(parse_str(text)?, flags)
}

fn resolve(file: FileConfig, flags: &Overrides) -> Result<ExperimentConfig, CliError> {
    let laws = Arc::new(build_laws(&file)?);
    let tolerance = flags.tolerance.or(file.tolerance).unwrap_or(DEFAULT_TOLERANCE);
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(CliError::InvalidConfig(format!("tolerance must be > 0, got {tolerance}")));
    }
    let ex1_grid = flags
        .ex1_grid
        .clone()
        .or(file.ex1_grid)
        .unwrap_or_else(|| DEFAULT_EX1_GRID.to_vec());
    for &(eps, a) in &ex1_grid {
        if !(eps > 0.0 && eps <= 1.0 && a > 0.0 && a.is_finite()) {
            return Err(CliError::InvalidConfig(format!("ex1 grid point ({eps}, {a}) is invalid")));
        }
    }
    let checkpoint_every = flags.checkpoint_every.or(file.checkpoint_every);
    if let Some(every) = checkpoint_every {
        positive("checkpoint_every", every)?;
    }
    Ok(ExperimentConfig {
        laws,
        mode: flags.mode.or(file.mode).unwrap_or(TreeMode::Augmented),
        method: flags.method.or(file.method).unwrap_or(Method::Direct),
        n_steps: positive("n_steps", flags.n_steps.or(file.n_steps).unwrap_or(DEFAULT_STEPS))?,
        replicas: positive("replicas", flags.replicas.or(file.replicas).unwrap_or(DEFAULT_REPLICAS))?,
        samples: positive("samples", flags.samples.or(file.samples).unwrap_or(DEFAULT_SAMPLES))?,
        tolerance,
        max_depth: flags.max_depth.or(file.max_depth).unwrap_or(DEFAULT_MAX_DEPTH),
        confirm_level: positive(
            "confirm_level",
            u64::from(flags.confirm_level.or(file.confirm_level).unwrap_or(DEFAULT_CONFIRM_LEVEL)),
        )? as u32,
        checkpoint_every,
        seed: flags.seed.or(file.seed).unwrap_or_else(rand::random),
        output: flags.output.clone().or(file.output),
        format: flags.format.or(file.format).unwrap_or_default(),
        ex1_grid,
        depth: flags.depth.or(file.depth).unwrap_or(DEFAULT_DUMP_DEPTH),
        path: flags.path.clone().or(file.path).unwrap_or_default(),
        walks: flags.walks.or(file.walks).unwrap_or(0),
    })
}
