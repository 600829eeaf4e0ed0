//! JSON report shapes. Every report carries `schema_version`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub schema_version: u32,
    /// Training multiply-accumulates: encoding, retraining, variance
    /// scoring and re-encoding.
    pub mac_ops: u64,
    pub inference_mac_ops: u64,
    pub final_accuracy: Option<f64>,
    pub effective_dim: usize,
    pub dim: usize,
    pub n_features: usize,
    pub n_classes: usize,
    pub n_train: usize,
    pub n_test: usize,
}

/// Wall-clock figures live apart from [`Metrics`] so that reruns produce
/// byte-identical metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub schema_version: u32,
    pub train_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub accuracy: f64,
    pub n: usize,
    pub bitwidth: Option<u32>,
    pub labels: Vec<String>,
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareEntry {
    pub name: String,
    pub dim: usize,
    pub effective_dim: usize,
    pub accuracy: Option<f64>,
    pub inference_mac_ops: u64,
    pub train_mac_ops: u64,
    pub epochs: usize,
    pub split_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub schema_version: u32,
    pub split_hash: String,
    pub models: Vec<CompareEntry>,
}

impl CompareReport {
    pub fn get(&self, name: &str) -> Option<&CompareEntry> {
        self.models.iter().find(|m| m.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitwidthRow {
    pub bitwidth: u32,
    pub accuracy: f64,
    pub bit_ops_per_inference: u64,
    pub model_bits: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitwidthReport {
    pub schema_version: u32,
    pub dim: usize,
    pub float_accuracy: f64,
    pub rows: Vec<BitwidthRow>,
}

pub const BITWIDTH_HEADER: &str = "bitwidth,accuracy,bit_ops_per_inference,model_bits";

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}
