//! Turn a [`DataConfig`] into vectorized train and test splits.

use std::path::Path;

use hdnids_core::dataset::{
    csv_width, feature_vectors_to_records, load_csv_against, load_csv_with, split, stratified_subsample,
    synth_gaussian, synth_intrusion, vectorize, CsvOptions, DatasetSchema, HeaderMode, LabelMap,
};
use hdnids_core::{FeatureVector, RawRecord};
use sha2::{Digest, Sha256};

use crate::config::{DataConfig, LabelMode, Source};
use crate::error::CliError;

pub struct Prepared {
    pub schema: DatasetSchema,
    pub train_raw: Vec<RawRecord>,
    pub test_raw: Vec<RawRecord>,
    pub train: Vec<FeatureVector>,
    pub test: Vec<FeatureVector>,
}

fn label_map(cfg: &DataConfig) -> Result<Option<LabelMap>, CliError> {
    if let Some(path) = &cfg.label_map {
        return Ok(Some(LabelMap::from_path(path)?));
    }
    Ok(match (cfg.labels, cfg.source) {
        (LabelMode::Nslkdd5, _) | (LabelMode::Auto, Source::Intrusion) => Some(LabelMap::nsl_kdd_five()),
        (LabelMode::Binary, _) => Some(LabelMap::binary(&cfg.normal_label)),
        (LabelMode::Raw, _) | (LabelMode::Auto, _) => None,
    })
}

/// CSV options for reading `path`, resolving a missing label column to
/// the last one.
pub fn csv_options(
    path: &Path,
    label_column: Option<usize>,
    drop_columns: &[usize],
    map: Option<LabelMap>,
) -> Result<CsvOptions, CliError> {
    let label_column = match label_column {
        Some(c) => c,
        None => csv_width(path)?.saturating_sub(1),
    };
    Ok(CsvOptions {
        label_column,
        drop_columns: drop_columns.to_vec(),
        header: HeaderMode::Auto,
        label_map: map,
    })
}

fn apply_map(records: &mut [RawRecord], map: &Option<LabelMap>) -> Result<(), CliError> {
    if let Some(m) = map {
        for r in records.iter_mut() {
            r.label = m.map_label(&r.label)?;
        }
    }
    Ok(())
}

fn sorted_labels(records: &[RawRecord]) -> Vec<String> {
    let set: std::collections::BTreeSet<&str> = records.iter().map(|r| r.label.as_str()).collect();
    set.into_iter().map(String::from).collect()
}

pub fn prepare(cfg: &DataConfig) -> Result<Prepared, CliError> {
    let map = label_map(cfg)?;
    let (mut schema, train_raw, test_raw) = match cfg.source {
        Source::Csv => {
            let path = cfg.path.as_deref().ok_or_else(|| CliError::Config("data.path is not set".into()))?;
            let opts = csv_options(path, cfg.label_column, &cfg.drop_columns, map)?;
            let (records, schema) = load_csv_with(path, &opts)?;
            match &cfg.test_path {
                Some(test_path) => {
                    let test = load_csv_against(test_path, &opts, &schema)?;
                    (schema, records, test)
                }
                None => {
                    let (train, test) = split(&records, cfg.test_fraction, cfg.split_seed)?;
                    (schema, train, test)
                }
            }
        }
        Source::Gaussian | Source::Intrusion => {
            let mut records = match cfg.source {
                Source::Gaussian => {
                    let g = &cfg.gaussian;
                    let fvs = synth_gaussian(g.n_features, g.n_classes, g.n_per_class, g.separation, g.seed)?;
                    feature_vectors_to_records(&fvs)
                }
                _ => {
                    let s = &cfg.intrusion;
                    synth_intrusion(s.records, s.noise, s.seed)?
                }
            };
            apply_map(&mut records, &map)?;
            let labels = match &map {
                Some(m) => m.categories().to_vec(),
                None => sorted_labels(&records),
            };
            let schema = DatasetSchema::from_records(&records, labels)?;
            let (train, test) = split(&records, cfg.test_fraction, cfg.split_seed)?;
            (schema, train, test)
        }
    };
    let train_raw = match cfg.train_subsample {
        Some(n) if n < train_raw.len() => {
            let label_of = |r: &RawRecord| schema.label_index(&r.label).unwrap_or(usize::MAX);
            stratified_subsample(&train_raw, label_of, n, cfg.subsample_seed)
        }
        _ => train_raw,
    };
    if cfg.schema_from_train {
        schema = schema.refit(&train_raw)?;
    }
    let train = vectorize(&train_raw, &schema)?;
    let test = vectorize(&test_raw, &schema)?;
    if train.is_empty() {
        return Err(CliError::Data("training split is empty".into()));
    }
    Ok(Prepared {
        schema,
        train_raw,
        test_raw,
        train,
        test,
    })
}

/// Records from a CSV written by `train` (label last, no header) or any
/// file described by `label_column`/`drop_columns`, typed by `schema`.
pub fn load_eval_set(
    path: &Path,
    schema: &DatasetSchema,
    label_column: Option<usize>,
    drop_columns: &[usize],
    map: Option<LabelMap>,
) -> Result<Vec<FeatureVector>, CliError> {
    let opts = csv_options(path, label_column, drop_columns, map)?;
    let records = load_csv_against(path, &opts, schema)?;
    Ok(vectorize(&records, schema)?)
}

/// SHA-256 over the vectorized splits, to show that compared models saw
/// the same data.
pub fn split_hash(train: &[FeatureVector], test: &[FeatureVector]) -> String {
    let mut h = Sha256::new();
    for (tag, part) in [(b"train", train), (b"test\0", test)] {
        h.update(tag);
        h.update((part.len() as u64).to_le_bytes());
        for fv in part {
            h.update((fv.label as u64).to_le_bytes());
            for x in &fv.features {
                h.update(x.to_bits().to_le_bytes());
            }
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
