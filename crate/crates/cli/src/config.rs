//! Experiment configs: JSON, checked against the published schema before
//! deserialization, then against the invariants the schema cannot express.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use jsonschema::Validator;
use lapkit_core::matrix_io::{read_matrix_market, JsonMatrix};
use lapkit_core::models::{build_direction, build_operator, build_rigging, DirectionSpec, ModelSpec, RiggingSpec};
use lapkit_core::{DirectionOperator, HermitianOperator, Rigging, YLadder};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const CONFIG_SCHEMA: &str = include_str!("../schema/config.schema.json");
pub const SCHEMA_VERSION: u32 = 1;
pub const SEED_OVERRIDE_VAR: &str = "LAPKIT_SEED_OVERRIDE";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: cannot read config: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("config is not valid JSON at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("config field {field}: {message}")]
    Field { field: String, message: String },
    #[error("{SEED_OVERRIDE_VAR} = {0:?} is not an unsigned integer")]
    SeedOverride(String),
}

impl ConfigError {
    fn field(field: impl Into<String>, message: impl ToString) -> Self {
        ConfigError::Field {
            field: field.into(),
            message: message.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MatrixSource {
    /// Resolved against the config file's directory when relative.
    MatrixMarket(PathBuf),
    Inline(JsonMatrix),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaSpec {
    List(Vec<f64>),
    Grid { start: f64, stop: f64, count: usize },
}

impl LambdaSpec {
    /// Grid points include both ends; a one-point grid is `start`.
    pub fn values(&self) -> Vec<f64> {
        match self {
            LambdaSpec::List(v) => v.clone(),
            LambdaSpec::Grid { start, stop, count } => {
                if *count == 1 {
                    return vec![*start];
                }
                let step = (stop - start) / (*count - 1) as f64;
                (0..*count).map(|k| start + step * k as f64).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_probe_tol")]
    pub probe_tol: f64,
    /// Relative rank cut; `100·n·eps` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_tol: Option<f64>,
    /// Resonance margin in units of `max(1, ρ(H0))`.
    #[serde(default = "default_margin")]
    pub margin: f64,
    /// Largest accepted eigen-residual of an extracted bound state.
    #[serde(default = "default_bound_state")]
    pub bound_state: f64,
}

fn default_probe_tol() -> f64 {
    lapkit_core::probe::DEFAULT_PROBE_TOL
}

fn default_margin() -> f64 {
    1e-3
}

fn default_bound_state() -> f64 {
    1e-7
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            probe_tol: default_probe_tol(),
            rank_tol: None,
            margin: default_margin(),
            bound_state: default_bound_state(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndependenceSettings {
    /// Alternative couplings compared against the chosen one.
    #[serde(default = "default_r_count")]
    pub r_count: usize,
    /// Alternative directions; a fixed trio when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directions: Option<Vec<DirectionSpec>>,
}

fn default_r_count() -> usize {
    3
}

impl Default for IndependenceSettings {
    fn default() -> Self {
        IndependenceSettings {
            r_count: default_r_count(),
            directions: None,
        }
    }
}

impl IndependenceSettings {
    pub fn direction_specs(&self) -> Vec<DirectionSpec> {
        self.directions.clone().unwrap_or_else(|| {
            vec![
                DirectionSpec::Scaled { factor: 2.5 },
                DirectionSpec::Random {
                    seed: 11,
                    indefinite: false,
                },
                DirectionSpec::Random {
                    seed: 12,
                    indefinite: true,
                },
            ]
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub run_label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<MatrixSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rigging: Option<RiggingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rigging_matrix: Option<MatrixSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<DirectionSpec>,
    pub lambdas: LambdaSpec,
    #[serde(default)]
    pub ladder: YLadder,
    /// Fractions of the local gap are used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Skip the resonance search and use this coupling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub force_r: Option<f64>,
    #[serde(default)]
    pub independence: IndependenceSettings,
    #[serde(default)]
    pub combination_seed: u64,
}

fn schema_validator() -> &'static Validator {
    static VALIDATOR: OnceLock<Validator> = OnceLock::new();
    VALIDATOR.get_or_init(|| {
        let schema: Value = serde_json::from_str(CONFIG_SCHEMA).expect("config schema is valid JSON");
        jsonschema::validator_for(&schema).expect("config schema compiles")
    })
}

fn pointer_to_field(pointer: &str) -> String {
    let trimmed = pointer.trim_start_matches('/').replace('/', ".");
    if trimmed.is_empty() {
        "<root>".into()
    } else {
        trimmed
    }
}

/// Parses and validates config text; `base_dir` anchors relative matrix paths.
pub fn parse_config(text: &str, base_dir: Option<&Path>) -> Result<ExperimentConfig, ConfigError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if let Some(err) = schema_validator().iter_errors(&value).next() {
        return Err(ConfigError::field(pointer_to_field(err.instance_path().as_str()), &err));
    }
    let mut config: ExperimentConfig = serde_path_to_error::deserialize(value)
        .map_err(|e| ConfigError::field(e.path().to_string(), e.inner()))?;
    config.ladder.validate().map_err(|e| ConfigError::field("ladder", e))?;
    if let Some(dir) = base_dir {
        for source in [&mut config.operator, &mut config.rigging_matrix].into_iter().flatten() {
            if let MatrixSource::MatrixMarket(path) = source {
                if path.is_relative() {
                    *path = dir.join(&*path);
                }
            }
        }
    }
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text, path.parent())
}

/// Value of the seed override variable, if set.
pub fn seed_override_from_env() -> Result<Option<u64>, ConfigError> {
    match std::env::var(SEED_OVERRIDE_VAR) {
        Ok(s) => s.trim().parse().map(Some).map_err(|_| ConfigError::SeedOverride(s)),
        Err(_) => Ok(None),
    }
}

impl ExperimentConfig {
    /// Replaces every seed in the config.
    pub fn override_seeds(&mut self, seed: u64) {
        if let Some(m) = &mut self.model {
            m.seed = seed;
        }
        if let Some(r) = &mut self.rigging {
            r.seed = seed;
        }
        let reseed = |d: &mut DirectionSpec| {
            if let DirectionSpec::Random { seed: s, .. } = d {
                *s = seed;
            }
        };
        if let Some(d) = &mut self.direction {
            reseed(d);
        }
        if let Some(ds) = &mut self.independence.directions {
            ds.iter_mut().for_each(reseed);
        }
        self.combination_seed = seed;
    }

    /// Builds `(H0, F, J)`; every failure names the offending field.
    pub fn build(&self) -> Result<(HermitianOperator, Rigging, DirectionOperator), ConfigError> {
        let h0 = match (&self.model, &self.operator) {
            (Some(spec), None) => build_operator(spec).map_err(|e| ConfigError::field("model", e))?,
            (None, Some(source)) => {
                let (m, storage) = load_source(source).map_err(|e| ConfigError::field("operator", e))?;
                HermitianOperator::with_storage(m, storage).map_err(|e| ConfigError::field("operator", e))?
            }
            _ => return Err(ConfigError::field("model", "exactly one of model and operator is required")),
        };
        let n = h0.dim();
        let rigging = match (&self.rigging, &self.rigging_matrix) {
            (Some(spec), None) => build_rigging(spec, n).map_err(|e| ConfigError::field("rigging", e))?,
            (None, Some(source)) => {
                let (m, _) = load_source(source).map_err(|e| ConfigError::field("rigging_matrix", e))?;
                if m.nrows() != n {
                    return Err(ConfigError::field(
                        "rigging_matrix",
                        format!("dimension {} does not match the operator ({n})", m.nrows()),
                    ));
                }
                Rigging::new(m).map_err(|e| ConfigError::field("rigging_matrix", e))?
            }
            (None, None) => Rigging::identity(n),
            _ => return Err(ConfigError::field("rigging", "rigging and rigging_matrix are exclusive")),
        };
        let direction = match &self.direction {
            Some(spec) => build_direction(spec, n).map_err(|e| ConfigError::field("direction", e))?,
            None => DirectionOperator::identity(n),
        };
        Ok((h0, rigging, direction))
    }

    pub fn lambda_values(&self) -> Vec<f64> {
        self.lambdas.values()
    }
}

fn load_source(source: &MatrixSource) -> lapkit_core::Result<(lapkit_core::CMatrix, lapkit_core::StorageKind)> {
    match source {
        MatrixSource::MatrixMarket(path) => {
            let loaded = read_matrix_market(path)?;
            Ok((loaded.matrix, loaded.storage))
        }
        MatrixSource::Inline(m) => Ok((m.to_matrix()?, lapkit_core::StorageKind::Dense)),
    }
}
