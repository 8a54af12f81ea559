//! Run manifests: the resolved configuration, content hashes of every input
//! and output, and per-band outcomes.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use lsfwi::inversion::{Algorithm, BandRecord};
use lsfwi::io::sha256_file;

use crate::config::RunConfig;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
}

impl FileRecord {
    pub fn of(path: &Path) -> Result<Self, CliError> {
        let sha256 = sha256_file(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(Self { path: path.display().to_string(), sha256 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandEntry {
    pub band: usize,
    pub frequencies_hz: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_no_interior_minimum: Option<bool>,
    pub termination: String,
    pub iterations: usize,
    pub initial_misfit: f64,
    pub final_misfit: f64,
    pub history: String,
}

impl BandEntry {
    pub fn from_record(rec: &BandRecord, frequencies: &[f64], history: &str) -> Self {
        Self {
            band: rec.band,
            frequencies_hz: rec.frequencies.iter().map(|&k| frequencies[k]).collect(),
            kappa: rec.kappa,
            b: rec.b.as_ref().map(|r| r.b),
            b_no_interior_minimum: rec.b.as_ref().map(|r| r.no_interior_minimum),
            termination: format!("{:?}", rec.termination),
            iterations: rec.iterations,
            initial_misfit: rec.initial_misfit,
            final_misfit: rec.final_misfit,
            history: history.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub config: RunConfig,
    pub inputs: BTreeMap<String, FileRecord>,
    pub outputs: BTreeMap<String, FileRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<Algorithm>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bands: Vec<BandEntry>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, f64>,
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            status: Status::Completed,
            error: None,
            config: config.clone(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            algorithm: None,
            bands: Vec::new(),
            metrics: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, key: &str, path: &Path) -> Result<(), CliError> {
        self.inputs.insert(key.to_string(), FileRecord::of(path)?);
        Ok(())
    }

    pub fn output(&mut self, key: &str, path: &Path) -> Result<(), CliError> {
        self.outputs.insert(key.to_string(), FileRecord::of(path)?);
        Ok(())
    }

    pub fn fail(&mut self, err: &CliError) {
        self.status = Status::Failed;
        self.error = Some(err.to_string());
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Io(e.to_string()))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}
