//! Dimension regeneration loop.
//!
//! Each cycle normalizes a copy of the model, ranks dimensions by their
//! variance across classes, and replaces the lowest-variance fraction with
//! fresh random features: new base rows in the encoder, zeroed model
//! columns, re-encoded training data, then retraining. Dimensions whose
//! values barely differ between classes carry little discriminative signal,
//! so they are the ones recycled.
//!
//! The physical width `D` never changes; the effective dimensionality counts
//! every dimension ever used, `D + Σ |dropped|`.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataset::FeatureVector;
use crate::encoder::EncoderState;
use crate::error::{HdcError, Result};
use crate::model::ClassModel;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReencodeMode {
    /// Recompute only the regenerated columns.
    #[default]
    Partial,
    /// Re-encode the whole training matrix.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegenSchedule {
    /// Fraction of dimensions regenerated per cycle.
    pub regen_rate: f64,
    pub cycles: usize,
    pub epochs_per_cycle: usize,
    /// Retraining epochs after the initial bundling pass, before any
    /// regeneration.
    pub warmup_epochs: usize,
    /// Stop once the last-epoch training error improves by less than 1e-4
    /// over three cycles.
    pub plateau_stop: bool,
    pub reencode: ReencodeMode,
}

impl Default for RegenSchedule {
    fn default() -> Self {
        Self {
            regen_rate: 0.10,
            cycles: 20,
            epochs_per_cycle: 1,
            warmup_epochs: 0,
            plateau_stop: false,
            reencode: ReencodeMode::Partial,
        }
    }
}

/// `⌊rate · dim⌋`, the number of dimensions dropped per cycle.
pub fn drop_count(rate: f64, dim: usize) -> usize {
    (rate * dim as f64).floor() as usize
}

impl RegenSchedule {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.epochs_per_cycle == 0 {
            return Err(HdcError::param("epochs_per_cycle must be at least 1"));
        }
        if self.cycles > 0 {
            if !(self.regen_rate > 0.0 && self.regen_rate < 1.0) {
                return Err(HdcError::param(format!(
                    "regeneration rate must lie in (0, 1), got {}",
                    self.regen_rate
                )));
            }
            if drop_count(self.regen_rate, dim) == 0 {
                return Err(HdcError::param(format!(
                    "regeneration rate {} drops no dimension at D = {dim}",
                    self.regen_rate
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub dim: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            dim: 512,
            sigma: 1.0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub encoder: EncoderConfig,
    pub eta: f64,
    pub schedule: RegenSchedule,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            encoder: EncoderConfig::default(),
            eta: 0.05,
            schedule: RegenSchedule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: usize,
    pub dropped: Vec<usize>,
    /// Error rate of each retraining epoch in this cycle.
    pub train_error: Vec<f64>,
    pub test_accuracy_before: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub effective_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegenReport {
    pub schema_version: u32,
    pub dim: usize,
    pub regen_rate: f64,
    /// Error rates of the bundling pass followed by warm-up epochs.
    pub initial_train_error: Vec<f64>,
    /// Test accuracy before the first regeneration cycle.
    pub initial_test_accuracy: Option<f64>,
    pub cycles: Vec<CycleRecord>,
    pub final_effective_dim: usize,
    pub final_test_accuracy: Option<f64>,
    pub stopped_early: bool,
    /// Multiply-accumulates spent on training, encoding included.
    pub train_mac_ops: u64,
}

/// Population variance of each dimension over the L2-normalized class rows.
pub fn dimension_variance(model: &ClassModel) -> Vec<f64> {
    let norm = model.normalized();
    let c = norm.classes();
    let l = c.nrows() as f64;
    c.columns()
        .into_iter()
        .map(|col| {
            let mean = col.sum() / l;
            col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / l
        })
        .collect()
}

/// Indices of the `⌊rate · D⌋` smallest variances, lowest index first on
/// ties. Returned in ascending index order.
pub fn select_drop(variances: &[f64], regen_rate: f64) -> Result<Vec<usize>> {
    if !(regen_rate > 0.0 && regen_rate < 1.0) {
        return Err(HdcError::param(format!(
            "regeneration rate must lie in (0, 1), got {regen_rate}"
        )));
    }
    let k = drop_count(regen_rate, variances.len());
    if k == 0 {
        return Err(HdcError::param(format!(
            "regeneration rate {regen_rate} drops no dimension at D = {}",
            variances.len()
        )));
    }
    let mut order: Vec<usize> = (0..variances.len()).collect();
    order.sort_by(|&a, &b| variances[a].total_cmp(&variances[b]).then(a.cmp(&b)));
    let mut picked = order[..k].to_vec();
    picked.sort_unstable();
    Ok(picked)
}

struct EncodedSet {
    features: Array2<f64>,
    encoded: Array2<f64>,
    labels: Vec<usize>,
}

impl EncodedSet {
    fn new(enc: &EncoderState, data: &[FeatureVector]) -> Result<Self> {
        let features = enc.feature_matrix(data)?;
        let encoded = enc.encode_matrix(features.view());
        Ok(Self {
            features,
            encoded,
            labels: data.iter().map(|f| f.label).collect(),
        })
    }

    fn refresh(&mut self, enc: &EncoderState, dims: &[usize], mode: ReencodeMode) -> Result<()> {
        match mode {
            ReencodeMode::Partial => enc.reencode_dims(self.features.view(), &mut self.encoded, dims),
            ReencodeMode::Full => {
                self.encoded = enc.encode_matrix(self.features.view());
                Ok(())
            }
        }
    }

    fn mac_ops(&self, dims: usize) -> u64 {
        (self.features.nrows() * self.features.ncols() * dims) as u64
    }
}

/// Owns model, encoder and the encoded data for the duration of training.
pub struct Trainer {
    model: ClassModel,
    encoder: EncoderState,
    train: EncodedSet,
    test: Option<EncodedSet>,
    schedule: RegenSchedule,
    mac_ops: u64,
    cycles_done: usize,
}

impl Trainer {
    pub fn new(
        train: &[FeatureVector],
        test: &[FeatureVector],
        n_classes: usize,
        config: &FitConfig,
    ) -> Result<Self> {
        if train.is_empty() {
            return Err(HdcError::Empty("training set"));
        }
        let n_features = train[0].features.len();
        let encoder = EncoderState::new(n_features, config.encoder.dim, config.encoder.sigma, config.encoder.seed)?;
        let model = ClassModel::new(n_classes, config.encoder.dim, config.eta)?;
        Self::from_parts(model, encoder, train, test, config.schedule.clone())
    }

    /// Start from an existing model and encoder (which must agree on D).
    pub fn from_parts(
        model: ClassModel,
        encoder: EncoderState,
        train: &[FeatureVector],
        test: &[FeatureVector],
        schedule: RegenSchedule,
    ) -> Result<Self> {
        if model.dim() != encoder.dim() {
            return Err(HdcError::DimensionMismatch {
                expected: encoder.dim(),
                found: model.dim(),
            });
        }
        schedule.validate(encoder.dim())?;
        let train = EncodedSet::new(&encoder, train)?;
        if let Some(&label) = train.labels.iter().find(|&&l| l >= model.n_classes()) {
            return Err(HdcError::LabelOutOfRange {
                label,
                n_classes: model.n_classes(),
            });
        }
        let mac_ops = train.mac_ops(encoder.dim());
        let test = if test.is_empty() {
            None
        } else {
            Some(EncodedSet::new(&encoder, test)?)
        };
        Ok(Self {
            model,
            encoder,
            train,
            test,
            schedule,
            mac_ops,
            cycles_done: 0,
        })
    }

    pub fn model(&self) -> &ClassModel {
        &self.model
    }

    pub fn encoder(&self) -> &EncoderState {
        &self.encoder
    }

    pub fn train_encoded(&self) -> ArrayView2<'_, f64> {
        self.train.encoded.view()
    }

    pub fn train_labels(&self) -> &[usize] {
        &self.train.labels
    }

    pub fn mac_ops(&self) -> u64 {
        self.mac_ops
    }

    pub fn into_parts(self) -> (ClassModel, EncoderState) {
        (self.model, self.encoder)
    }

    pub fn test_accuracy(&self) -> Result<Option<f64>> {
        match &self.test {
            Some(t) => Ok(Some(self.model.accuracy(t.encoded.view(), &t.labels)?)),
            None => Ok(None),
        }
    }

    /// One pass over the training set; returns the error rate.
    pub fn epoch(&mut self) -> Result<f64> {
        let stats = self.model.retrain_epoch(self.train.encoded.view(), &self.train.labels)?;
        self.mac_ops += stats.mac_ops;
        Ok(stats.error_rate)
    }

    /// Steps up to and including re-encoding: score variances, pick the
    /// drop set, regenerate those encoder rows, zero the model columns and
    /// refresh the encoded data. Returns the drop set.
    pub fn drop_and_regenerate(&mut self) -> Result<Vec<usize>> {
        let (l, d) = (self.model.n_classes() as u64, self.model.dim() as u64);
        let variances = dimension_variance(&self.model);
        let dropped = select_drop(&variances, self.schedule.regen_rate)?;
        self.mac_ops += 2 * l * d;
        self.encoder.regenerate_dims(&dropped)?;
        self.model.zero_columns(&dropped)?;
        let mode = self.schedule.reencode;
        self.train.refresh(&self.encoder, &dropped, mode)?;
        self.mac_ops += match mode {
            ReencodeMode::Partial => self.train.mac_ops(dropped.len()),
            ReencodeMode::Full => self.train.mac_ops(self.encoder.dim()),
        };
        if let Some(t) = self.test.as_mut() {
            t.refresh(&self.encoder, &dropped, mode)?;
        }
        Ok(dropped)
    }

    pub fn run_cycle(&mut self) -> Result<CycleRecord> {
        let test_accuracy_before = self.test_accuracy()?;
        let dropped = self.drop_and_regenerate()?;
        let train_error = (0..self.schedule.epochs_per_cycle)
            .map(|_| self.epoch())
            .collect::<Result<Vec<_>>>()?;
        self.model.add_regenerated(dropped.len());
        self.cycles_done += 1;
        Ok(CycleRecord {
            cycle: self.cycles_done,
            dropped,
            train_error,
            test_accuracy_before,
            test_accuracy: self.test_accuracy()?,
            effective_dim: self.model.effective_dim(),
        })
    }

    /// Bundling pass, warm-up epochs, then the regeneration cycles.
    pub fn run(&mut self) -> Result<RegenReport> {
        let mut initial_train_error = vec![self.epoch()?];
        for _ in 0..self.schedule.warmup_epochs {
            initial_train_error.push(self.epoch()?);
        }
        let initial_test_accuracy = self.test_accuracy()?;
        let mut cycles: Vec<CycleRecord> = Vec::with_capacity(self.schedule.cycles);
        let mut stopped_early = false;
        for _ in 0..self.schedule.cycles {
            cycles.push(self.run_cycle()?);
            if self.schedule.plateau_stop && plateaued(&cycles) {
                stopped_early = cycles.len() < self.schedule.cycles;
                break;
            }
        }
        let final_test_accuracy = match cycles.last() {
            Some(c) => c.test_accuracy,
            None => initial_test_accuracy,
        };
        Ok(RegenReport {
            schema_version: REPORT_SCHEMA_VERSION,
            dim: self.model.dim(),
            regen_rate: self.schedule.regen_rate,
            initial_train_error,
            initial_test_accuracy,
            cycles,
            final_effective_dim: self.model.effective_dim(),
            final_test_accuracy,
            stopped_early,
            train_mac_ops: self.mac_ops,
        })
    }
}

fn plateaued(cycles: &[CycleRecord]) -> bool {
    let last = |c: &CycleRecord| c.train_error.last().copied().unwrap_or(0.0);
    match cycles.len() {
        n if n > 3 => last(&cycles[n - 4]) - last(&cycles[n - 1]) < 1e-4,
        _ => false,
    }
}

pub struct FitOutput {
    pub model: ClassModel,
    pub encoder: EncoderState,
    pub report: RegenReport,
}

/// Encode, bundle, and run the configured regeneration schedule. With
/// `cycles = 0` this is plain static-encoder training.
pub fn fit(train: &[FeatureVector], test: &[FeatureVector], n_classes: usize, config: &FitConfig) -> Result<FitOutput> {
    let mut trainer = Trainer::new(train, test, n_classes, config)?;
    let report = trainer.run()?;
    let (model, encoder) = trainer.into_parts();
    Ok(FitOutput { model, encoder, report })
}
