//! Report assembly and persistence. Everything a run writes goes through
//! [`write_run`], which serializes in a fixed order so that identical inputs
//! produce identical bytes.

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use anyhow::{bail, Context, Result};
use jsonschema::Validator;
use lapkit_core::probe::{Classification, ProbeRecord};
use lapkit_core::subspace::SubspaceRecord;
use lapkit_core::verifier::Theorem1Report;
use lapkit_core::ResonanceSet;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;

pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");
pub const REPORT_FILE: &str = "report.json";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Probe,
    Resonances,
    SolveLs,
    Verify,
    Sweep,
}

#[derive(Debug, Clone, Serialize)]
pub struct IndependenceRecord {
    pub r_values: Vec<f64>,
    pub r_angle: Option<f64>,
    pub direction_angle: Option<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundStateRecord {
    pub index: usize,
    pub eigen_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub sup_norm: f64,
    pub argmax_y: f64,
}

/// Everything computed at one `λ`. Absent stages are omitted.
#[derive(Debug, Clone, Serialize)]
pub struct LambdaRecord {
    pub lambda: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<Classification>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resonance_set: Option<ResonanceSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chosen_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upsilon_dimension: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upsilon: Option<SubspaceRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub independence: Option<IndependenceRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theorem1: Option<Theorem1Report>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_states: Option<Vec<BoundStateRecord>>,
    pub passed: bool,
    pub errors: Vec<String>,
}

impl LambdaRecord {
    pub fn new(lambda: f64) -> Self {
        LambdaRecord {
            lambda,
            probe: None,
            sweep: None,
            classification: None,
            resonance_set: None,
            chosen_r: None,
            upsilon_dimension: None,
            upsilon: None,
            independence: None,
            theorem1: None,
            bound_states: None,
            passed: true,
            errors: Vec::new(),
        }
    }

    pub fn fail(&mut self, msg: impl ToString) {
        self.passed = false;
        self.errors.push(msg.to_string());
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub lambdas: usize,
    pub passed: usize,
    pub inconclusive: usize,
    pub exit_code: i32,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub command: Command,
    pub toolkit_version: String,
    pub run_label: String,
    pub config_echo: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed_override: Option<u64>,
    pub dimension: usize,
    pub rigging_condition: f64,
    pub records: Vec<LambdaRecord>,
    /// Profile files written next to the report.
    pub artifacts: Vec<String>,
    pub summary: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_unix: Option<u64>,
}

impl ExperimentReport {
    /// Drops the fields that differ between otherwise identical runs.
    pub fn canonicalize(&mut self) {
        self.wall_time = None;
        self.generated_unix = None;
        self.config_echo.output_dir = None;
    }
}

/// One CSV profile: `name.csv` with a header row.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone)]
pub enum Cell {
    Real(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    /// Reals use 17 significant digits so they round-trip exactly.
    pub fn render(&self) -> String {
        match self {
            Cell::Real(x) if x.is_finite() => format!("{x:.16e}"),
            Cell::Real(x) => x.to_string(),
            Cell::Int(k) => k.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl Table {
    pub fn new(name: &str, header: &[&'static str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            if row.len() != self.header.len() {
                bail!("{}: row has {} cells for {} columns", self.name, row.len(), self.header.len());
            }
            w.write_record(row.iter().map(Cell::render))?;
        }
        Ok(w.into_inner().context("flushing CSV buffer")?)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub run_label: String,
    pub artifacts: Vec<ManifestEntry>,
}

fn report_validator() -> &'static Validator {
    static VALIDATOR: OnceLock<Validator> = OnceLock::new();
    VALIDATOR.get_or_init(|| {
        let schema: Value = serde_json::from_str(REPORT_SCHEMA).expect("report schema is valid JSON");
        jsonschema::validator_for(&schema).expect("report schema compiles")
    })
}

/// Schema violations of a serialized report, as `path: message` lines.
pub fn report_schema_errors(report: &Value) -> Vec<String> {
    report_validator()
        .iter_errors(report)
        .map(|e| format!("{}: {e}", e.instance_path().as_str()))
        .collect()
}

fn entry(path: &str, bytes: &[u8]) -> ManifestEntry {
    ManifestEntry {
        path: path.to_string(),
        bytes: bytes.len(),
        sha256: hex::encode(Sha256::digest(bytes)),
    }
}

/// Writes the tables, `report.json` and `manifest.json` into `dir`.
pub fn write_run(dir: &Path, report: &ExperimentReport, tables: &[Table]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let value = serde_json::to_value(report)?;
    let problems = report_schema_errors(&value);
    if !problems.is_empty() {
        bail!("report violates its schema: {}", problems.join("; "));
    }
    let mut entries = Vec::new();
    for table in tables {
        let bytes = table.to_csv()?;
        let name = table.file_name();
        std::fs::write(dir.join(&name), &bytes).with_context(|| format!("writing {name}"))?;
        entries.push(entry(&name, &bytes));
    }
    let mut text = serde_json::to_vec_pretty(&value)?;
    text.push(b'\n');
    let report_path = dir.join(REPORT_FILE);
    std::fs::write(&report_path, &text).with_context(|| format!("writing {}", report_path.display()))?;
    entries.push(entry(REPORT_FILE, &text));
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = Manifest {
        run_label: report.run_label.clone(),
        artifacts: entries,
    };
    let mut text = serde_json::to_vec_pretty(&manifest)?;
    text.push(b'\n');
    std::fs::write(dir.join(MANIFEST_FILE), text)?;
    Ok(report_path)
}
