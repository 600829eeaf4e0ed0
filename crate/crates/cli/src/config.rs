//! Run configuration: a TOML file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use hdnids_core::regen::{EncoderConfig, FitConfig, ReencodeMode, RegenSchedule};
use hdnids_core::Bitwidth;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "HDNIDS_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Csv,
    #[default]
    Gaussian,
    Intrusion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum LabelMode {
    /// Five NSL-KDD categories for intrusion data, raw labels otherwise.
    #[default]
    Auto,
    Raw,
    Nslkdd5,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussianConfig {
    pub n_features: usize,
    pub n_classes: usize,
    pub n_per_class: usize,
    pub separation: f64,
    pub seed: u64,
}

impl Default for GaussianConfig {
    fn default() -> Self {
        Self {
            n_features: 16,
            n_classes: 4,
            n_per_class: 250,
            separation: 3.0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntrusionConfig {
    pub records: usize,
    pub noise: f64,
    pub seed: u64,
}

impl Default for IntrusionConfig {
    fn default() -> Self {
        Self {
            records: 25_000,
            noise: 0.5,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: Source,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Separate test file; without it the loaded data is split.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_path: Option<PathBuf>,
    /// Defaults to the last column.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_column: Option<usize>,
    pub drop_columns: Vec<usize>,
    pub labels: LabelMode,
    /// Two-column raw label to category file; takes priority over `labels`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_map: Option<PathBuf>,
    pub normal_label: String,
    pub schema_from_train: bool,
    pub test_fraction: f64,
    pub split_seed: u64,
    /// Stratified subsample of the training split.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub train_subsample: Option<usize>,
    pub subsample_seed: u64,
    pub gaussian: GaussianConfig,
    pub intrusion: IntrusionConfig,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            source: Source::default(),
            path: None,
            test_path: None,
            label_column: None,
            drop_columns: Vec::new(),
            labels: LabelMode::Auto,
            label_map: None,
            normal_label: "normal".into(),
            schema_from_train: false,
            test_fraction: 0.2,
            split_seed: 1,
            train_subsample: None,
            subsample_seed: 1,
            gaussian: GaussianConfig::default(),
            intrusion: IntrusionConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub eta: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { eta: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BitwidthConfig {
    pub bitwidths: Vec<u32>,
}

impl Default for BitwidthConfig {
    fn default() -> Self {
        Self {
            bitwidths: vec![32, 16, 8, 4, 2, 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaultConfig {
    pub bitwidths: Vec<u32>,
    pub p_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
}

impl Default for FaultConfig {
    fn default() -> Self {
        Self {
            bitwidths: vec![32, 16, 8, 4, 2, 1],
            p_grid: vec![0.0, 0.001, 0.005, 0.01, 0.05, 0.1],
            trials: 10,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    /// Width of the large static model; defaults to 8 × `encoder.dim`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub large_dim: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Where artifacts go. Not part of the snapshot: it does not affect
    /// results.
    #[serde(skip_serializing)]
    pub output_dir: PathBuf,
    /// Worker cap; also left out of the snapshot.
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
    pub data: DataConfig,
    pub encoder: EncoderConfig,
    pub train: TrainConfig,
    pub schedule: RegenSchedule,
    pub bitwidth: BitwidthConfig,
    pub faults: FaultConfig,
    pub compare: CompareConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("hdnids-out"),
            threads: None,
            data: DataConfig::default(),
            encoder: EncoderConfig::default(),
            train: TrainConfig::default(),
            schedule: RegenSchedule::default(),
            bitwidth: BitwidthConfig::default(),
            faults: FaultConfig::default(),
            compare: CompareConfig::default(),
        }
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn parse_bitwidths(bits: &[u32]) -> Result<Vec<Bitwidth>, CliError> {
    if bits.is_empty() {
        return Err(bad("bitwidth list is empty"));
    }
    bits.iter()
        .map(|&b| Bitwidth::from_bits(b).map_err(|e| bad(e.to_string())))
        .collect()
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))
    }

    /// The snapshot written next to every run's artifacts.
    pub fn snapshot(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Invariant(format!("config snapshot: {e}")))
    }

    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            encoder: self.encoder.clone(),
            eta: self.train.eta,
            schedule: self.schedule.clone(),
        }
    }

    /// Same data and encoder, regeneration switched off, and the epoch
    /// budget of the dynamic schedule spent as plain retraining.
    pub fn static_fit_config(&self, dim: usize) -> FitConfig {
        let s = &self.schedule;
        FitConfig {
            encoder: EncoderConfig {
                dim,
                ..self.encoder.clone()
            },
            eta: self.train.eta,
            schedule: RegenSchedule {
                cycles: 0,
                warmup_epochs: s.warmup_epochs + s.cycles * s.epochs_per_cycle,
                plateau_stop: false,
                reencode: ReencodeMode::default(),
                ..s.clone()
            },
        }
    }

    pub fn large_dim(&self) -> usize {
        self.compare.large_dim.unwrap_or(8 * self.encoder.dim)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let d = &self.data;
        if d.source == Source::Csv && d.path.is_none() {
            return Err(bad("data.source = \"csv\" needs data.path"));
        }
        if !(d.test_fraction > 0.0 && d.test_fraction < 1.0) {
            return Err(bad(format!("data.test_fraction must lie in (0, 1), got {}", d.test_fraction)));
        }
        if d.train_subsample == Some(0) {
            return Err(bad("data.train_subsample must be at least 1"));
        }
        if self.encoder.dim == 0 {
            return Err(bad("encoder.dim must be at least 1"));
        }
        if !(self.encoder.sigma > 0.0 && self.encoder.sigma.is_finite()) {
            return Err(bad("encoder.sigma must be positive"));
        }
        if !(self.train.eta > 0.0 && self.train.eta.is_finite()) {
            return Err(bad("train.eta must be positive"));
        }
        self.schedule
            .validate(self.encoder.dim)
            .map_err(|e| bad(e.to_string()))?;
        if self.large_dim() == 0 {
            return Err(bad("compare.large_dim must be at least 1"));
        }
        parse_bitwidths(&self.bitwidth.bitwidths)?;
        parse_bitwidths(&self.faults.bitwidths)?;
        if self.faults.trials == 0 {
            return Err(bad("faults.trials must be at least 1"));
        }
        if let Some(p) = self.faults.p_grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(bad(format!("flip probability {p} outside [0, 1]")));
        }
        if self.threads == Some(0) {
            return Err(bad("threads must be at least 1"));
        }
        Ok(())
    }
}
