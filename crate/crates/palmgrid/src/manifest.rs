//! Run manifests: the serialized, hashed record of every configuration
//! value behind a result set, plus the policy checkpoint file format.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::gridlab::{CellFailure, EvalProtocol, GridCell, GridSpec};
use crate::handspec::{serialize_hand_spec, HandModel};
use crate::physics::PhysicsConfig;
use crate::task::TaskConfig;
use crate::trainer::TrainConfig;

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

/// SHA-256 hex digest of a value's canonical JSON form. Struct fields
/// serialize in declaration order, so the digest is stable.
pub fn json_sha256<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable config");
    hex::encode(Sha256::digest(bytes))
}

/// Digest of a hand model's canonical spec text; lets a manifest pin
/// the exact spec content rather than just a name.
pub fn hand_spec_hash(model: &HandModel) -> String {
    hex::encode(Sha256::digest(serialize_hand_spec(model).as_bytes()))
}

/// Every configuration value that shapes sweep results. Two runs with
/// equal hashes are interchangeable, which is what resume relies on.
/// Worker counts, commands, timestamps, and output paths stay out: they
/// cannot change the numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub hand_name: String,
    pub hand_spec_hash: String,
    pub grid: GridSpec,
    pub physics: PhysicsConfig,
    pub task: TaskConfig,
    pub train: TrainConfig,
    pub eval: EvalProtocol,
    pub seeds: Vec<u64>,
}

impl SweepConfig {
    pub fn hash(&self) -> String {
        json_sha256(self)
    }
}

/// One planned (cell, seed) job.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JobEntry {
    pub column: usize,
    pub row: usize,
    pub x: f64,
    pub y: f64,
    pub seed: u64,
}

impl JobEntry {
    pub fn new(cell: &GridCell, seed: u64) -> Self {
        Self {
            column: cell.index.0,
            row: cell.index.1,
            x: cell.xy[0],
            y: cell.xy[1],
            seed,
        }
    }
}

/// Artifact names inside the run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    pub cells_dir: String,
    pub policies_dir: String,
    pub results_csv: String,
    pub summary_csv: String,
    pub table_csv: String,
    pub curves_csv: String,
    pub heatmap_svg: String,
    pub goals_csv: String,
}

impl Default for OutputPaths {
    fn default() -> Self {
        Self {
            cells_dir: "cells".into(),
            policies_dir: "policies".into(),
            results_csv: "results.csv".into(),
            summary_csv: "summary.csv".into(),
            table_csv: "table.csv".into(),
            curves_csv: "curves.csv".into(),
            heatmap_svg: "heatmap.svg".into(),
            goals_csv: "goals.csv".into(),
        }
    }
}

/// The canonical record of one sweep invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// Argv as invoked; informational only.
    pub command: Vec<String>,
    /// Unix seconds; honors SOURCE_DATE_EPOCH for reproducible builds.
    pub timestamp_epoch_seconds: u64,
    pub worker_count: usize,
    pub config: SweepConfig,
    /// `config.hash()`, repeated so readers can verify result files
    /// without re-deriving it.
    pub config_hash: String,
    pub jobs: Vec<JobEntry>,
    pub outputs: OutputPaths,
    /// Jobs that returned errors; their cells have no result files.
    pub failures: Vec<CellFailure>,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<(), ManifestError> {
        let json = serde_json::to_vec_pretty(self).map_err(|source| ManifestError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        fs::write(path, json).map_err(|source| ManifestError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read(path: &Path) -> Result<Self, ManifestError> {
        let bytes = fs::read(path).map_err(|source| ManifestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_slice(&bytes).map_err(|source| ManifestError::Json {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Current time in Unix seconds, overridable through SOURCE_DATE_EPOCH so
/// archived runs can be reproduced byte for byte.
pub fn timestamp_epoch_seconds() -> u64 {
    if let Ok(value) = std::env::var("SOURCE_DATE_EPOCH") {
        if let Ok(seconds) = value.parse() {
            return seconds;
        }
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
