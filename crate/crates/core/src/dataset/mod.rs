//! CSV ingestion, preprocessing and splitting for intrusion-detection data.
//!
//! Numeric columns are min-max scaled into `[0, 1]`, categorical columns are
//! one-hot expanded in schema order. Schema inference happens in one scan of
//! the parsed rows: a column is numeric iff every cell parses as a finite real.

mod intrusion;
mod labels;

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{HdcError, Result};
use crate::rng::{substream, Domain};

pub use intrusion::{synth_intrusion, INTRUSION_COLUMNS};
pub use labels::LabelMap;

/// One cell of a raw record.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Numeric(f64),
    Categorical(String),
}

/// One parsed row, with the label column split off.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub values: Vec<Cell>,
    pub label: String,
}

/// A preprocessed sample: features in `[0, 1]` and a class index.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub features: Vec<f64>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnSchema {
    Numeric { min: f64, max: f64 },
    Categorical { categories: Vec<String> },
}

impl ColumnSchema {
    fn width(&self) -> usize {
        match self {
            ColumnSchema::Numeric { .. } => 1,
            ColumnSchema::Categorical { categories } => categories.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub columns: Vec<ColumnSchema>,
    /// Class names; position is the class index.
    pub labels: Vec<String>,
}

impl DatasetSchema {
    /// Width of the vectorized feature space.
    pub fn n_features(&self) -> usize {
        self.columns.iter().map(ColumnSchema::width).sum()
    }

    pub fn n_classes(&self) -> usize {
        self.labels.len()
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Schema of already-typed records; column kinds come from the first
    /// record, class order from `labels`.
    pub fn from_records(records: &[RawRecord], labels: Vec<String>) -> Result<DatasetSchema> {
        let first = records.first().ok_or(HdcError::Empty("records"))?;
        let columns = first
            .values
            .iter()
            .map(|c| match c {
                Cell::Numeric(_) => ColumnSchema::Numeric { min: 0.0, max: 0.0 },
                Cell::Categorical(_) => ColumnSchema::Categorical { categories: Vec::new() },
            })
            .collect();
        DatasetSchema { columns, labels }.refit(records)
    }

    /// Recompute numeric ranges and category lists from `records`, keeping
    /// the column kinds and label order. Used when statistics should come
    /// from the training split only.
    pub fn refit(&self, records: &[RawRecord]) -> Result<DatasetSchema> {
        let mut columns = self.columns.clone();
        for (i, rec) in records.iter().enumerate() {
            check_arity(i, rec, columns.len())?;
        }
        for (c, col) in columns.iter_mut().enumerate() {
            match col {
                ColumnSchema::Numeric { min, max } => {
                    let (lo, hi) = records.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, r| {
                        match r.values[c] {
                            Cell::Numeric(v) => (acc.0.min(v), acc.1.max(v)),
                            Cell::Categorical(_) => acc,
                        }
                    });
                    if lo <= hi {
                        *min = lo;
                        *max = hi;
                    }
                }
                ColumnSchema::Categorical { categories } => {
                    categories.clear();
                    for r in records {
                        if let Cell::Categorical(s) = &r.values[c] {
                            if !categories.contains(s) {
                                categories.push(s.clone());
                            }
                        }
                    }
                }
            }
        }
        Ok(DatasetSchema {
            columns,
            labels: self.labels.clone(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeaderMode {
    /// Header iff no cell of the first row parses as a number.
    #[default]
    Auto,
    Present,
    Absent,
}

#[derive(Debug, Clone, Default)]
pub struct CsvOptions {
    pub label_column: usize,
    /// Columns discarded before schema inference (e.g. the NSL-KDD
    /// difficulty score). Indices refer to the file's columns.
    pub drop_columns: Vec<usize>,
    pub header: HeaderMode,
    pub label_map: Option<LabelMap>,
}

impl CsvOptions {
    pub fn new(label_column: usize) -> Self {
        Self {
            label_column,
            ..Default::default()
        }
    }
}

/// Untyped rows: feature cells as text plus the (mapped) label.
#[derive(Debug, Clone, Default)]
pub struct RawTable {
    pub rows: Vec<(Vec<String>, String)>,
    /// 1-based file line of each row, for error messages.
    pub lines: Vec<usize>,
    /// Label order dictated by a label mapping, if one was applied.
    pub label_order: Option<Vec<String>>,
}

fn parses_numeric(cell: &str) -> bool {
    cell.parse::<f64>().is_ok()
}

/// Parse CSV text into a [`RawTable`], checking arity on every row.
pub fn read_rows<R: Read>(reader: R, opts: &CsvOptions) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut table = RawTable {
        label_order: opts.label_map.as_ref().map(|m| m.categories().to_vec()),
        ..Default::default()
    };
    let mut arity: Option<usize> = None;
    let mut first = true;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        if first {
            first = false;
            let is_header = match opts.header {
                HeaderMode::Present => true,
                HeaderMode::Absent => false,
                HeaderMode::Auto => !rec.iter().any(parses_numeric),
            };
            if is_header {
                arity = Some(rec.len());
                continue;
            }
        }
        let expected = *arity.get_or_insert(rec.len());
        if rec.len() != expected {
            return Err(HdcError::RaggedRow {
                row: line,
                expected,
                found: rec.len(),
            });
        }
        if opts.label_column >= rec.len() {
            return Err(HdcError::Cell {
                row: line,
                column: opts.label_column,
                message: "label column missing".into(),
            });
        }
        let raw_label = &rec[opts.label_column];
        let label = match &opts.label_map {
            Some(m) => m.map_label(raw_label).map_err(|e| HdcError::Cell {
                row: line,
                column: opts.label_column,
                message: e.to_string(),
            })?,
            None => raw_label.to_string(),
        };
        let cells = rec
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != opts.label_column && !opts.drop_columns.contains(i))
            .map(|(_, c)| c.to_string())
            .collect();
        table.rows.push((cells, label));
        table.lines.push(line);
    }
    if table.rows.is_empty() {
        return Err(HdcError::Empty("csv file has no data rows"));
    }
    Ok(table)
}

/// Infer column kinds, numeric ranges, category lists and the label map.
pub fn infer_schema(table: &RawTable) -> Result<DatasetSchema> {
    let width = table.rows.first().map(|r| r.0.len()).unwrap_or(0);
    let mut numeric = vec![true; width];
    let mut mins = vec![f64::INFINITY; width];
    let mut maxs = vec![f64::NEG_INFINITY; width];
    let mut cats: Vec<Vec<String>> = vec![Vec::new(); width];
    let mut seen: Vec<HashMap<String, ()>> = vec![HashMap::new(); width];
    let mut labels = BTreeSet::new();
    for ((cells, label), &line) in table.rows.iter().zip(&table.lines) {
        labels.insert(label.clone());
        for (c, cell) in cells.iter().enumerate() {
            match cell.parse::<f64>() {
                Ok(v) if !v.is_finite() => {
                    return Err(HdcError::NonFinite {
                        row: line,
                        column: c,
                        value: cell.clone(),
                    })
                }
                Ok(v) => {
                    mins[c] = mins[c].min(v);
                    maxs[c] = maxs[c].max(v);
                }
                Err(_) => numeric[c] = false,
            }
            if seen[c].insert(cell.clone(), ()).is_none() {
                cats[c].push(cell.clone());
            }
        }
    }
    let columns = (0..width)
        .map(|c| {
            if numeric[c] {
                ColumnSchema::Numeric {
                    min: mins[c],
                    max: maxs[c],
                }
            } else {
                ColumnSchema::Categorical {
                    categories: std::mem::take(&mut cats[c]),
                }
            }
        })
        .collect();
    let labels = match &table.label_order {
        Some(order) => order.clone(),
        None => labels.into_iter().collect(),
    };
    Ok(DatasetSchema { columns, labels })
}

/// Type the cells of `table` according to `schema`.
pub fn type_rows(table: &RawTable, schema: &DatasetSchema) -> Result<Vec<RawRecord>> {
    table
        .rows
        .iter()
        .zip(&table.lines)
        .map(|((cells, label), &line)| {
            if cells.len() != schema.columns.len() {
                return Err(HdcError::RaggedRow {
                    row: line,
                    expected: schema.columns.len(),
                    found: cells.len(),
                });
            }
            let values = cells
                .iter()
                .zip(&schema.columns)
                .enumerate()
                .map(|(c, (cell, col))| match col {
                    ColumnSchema::Numeric { .. } => match cell.parse::<f64>() {
                        Ok(v) if v.is_finite() => Ok(Cell::Numeric(v)),
                        Ok(_) => Err(HdcError::NonFinite {
                            row: line,
                            column: c,
                            value: cell.clone(),
                        }),
                        Err(_) => Err(HdcError::Cell {
                            row: line,
                            column: c,
                            message: format!("expected a number, found {cell:?}"),
                        }),
                    },
                    ColumnSchema::Categorical { .. } => Ok(Cell::Categorical(cell.clone())),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(RawRecord {
                values,
                label: label.clone(),
            })
        })
        .collect()
}

/// Number of cells in the first non-empty row of a CSV file.
pub fn csv_width(path: impl AsRef<Path>) -> Result<usize> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(std::fs::File::open(path)?);
    for rec in rdr.records() {
        let rec = rec?;
        if !rec.iter().all(|c| c.trim().is_empty()) {
            return Ok(rec.len());
        }
    }
    Err(HdcError::Empty("csv file has no rows"))
}

/// Load a CSV file, inferring its schema. `label_column` indexes the file's
/// columns.
pub fn load_csv(path: impl AsRef<Path>, label_column: usize) -> Result<(Vec<RawRecord>, DatasetSchema)> {
    load_csv_with(path, &CsvOptions::new(label_column))
}

pub fn load_csv_with(path: impl AsRef<Path>, opts: &CsvOptions) -> Result<(Vec<RawRecord>, DatasetSchema)> {
    let table = read_rows(std::fs::File::open(path)?, opts)?;
    let schema = infer_schema(&table)?;
    let records = type_rows(&table, &schema)?;
    Ok((records, schema))
}

/// Load a CSV file whose cells are typed by an existing schema (e.g. a test
/// file read against the training schema).
pub fn load_csv_against(path: impl AsRef<Path>, opts: &CsvOptions, schema: &DatasetSchema) -> Result<Vec<RawRecord>> {
    let table = read_rows(std::fs::File::open(path)?, opts)?;
    type_rows(&table, schema)
}

fn check_arity(index: usize, rec: &RawRecord, width: usize) -> Result<()> {
    if rec.values.len() != width {
        return Err(HdcError::at(
            index,
            HdcError::DimensionMismatch {
                expected: width,
                found: rec.values.len(),
            },
        ));
    }
    Ok(())
}

/// Min-max scale numeric columns and one-hot expand categorical ones.
///
/// Constant numeric columns map to 0, values outside the schema range are
/// clamped, unseen categories produce an all-zero block.
pub fn vectorize(records: &[RawRecord], schema: &DatasetSchema) -> Result<Vec<FeatureVector>> {
    let n = schema.n_features();
    records
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            check_arity(i, rec, schema.columns.len())?;
            let mut features = Vec::with_capacity(n);
            for (cell, col) in rec.values.iter().zip(&schema.columns) {
                match (cell, col) {
                    (Cell::Numeric(v), ColumnSchema::Numeric { min, max }) => {
                        let x = if max > min { ((v - min) / (max - min)).clamp(0.0, 1.0) } else { 0.0 };
                        features.push(x);
                    }
                    (Cell::Categorical(s), ColumnSchema::Categorical { categories }) => {
                        features.extend(categories.iter().map(|c| if c == s { 1.0 } else { 0.0 }));
                    }
                    _ => {
                        return Err(HdcError::at(
                            i,
                            HdcError::InvalidParameter("cell type does not match schema".into()),
                        ))
                    }
                }
            }
            let label = schema
                .label_index(&rec.label)
                .ok_or_else(|| HdcError::at(i, HdcError::UnknownLabel(rec.label.clone())))?;
            Ok(FeatureVector { features, label })
        })
        .collect()
}

/// Deterministic shuffle-and-split. The training side gets
/// `⌈(1 − f)·N⌉` items; both sides keep shuffled order.
pub fn split<T: Clone>(data: &[T], test_fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if data.is_empty() {
        return Err(HdcError::Empty("split input"));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(HdcError::param(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let order = shuffled_indices(data.len(), seed);
    let n_test = (test_fraction * data.len() as f64 + 1e-9).floor() as usize;
    let n_train = data.len() - n_test;
    let train = order[..n_train].iter().map(|&i| data[i].clone()).collect();
    let test = order[n_train..].iter().map(|&i| data[i].clone()).collect();
    Ok((train, test))
}

pub fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut substream(seed, Domain::Split, 0));
    order
}

/// Draw `n` samples, keeping class proportions (largest-remainder
/// allocation). Output keeps input order.
pub fn stratified_subsample<T: Clone>(data: &[T], label_of: impl Fn(&T) -> usize, n: usize, seed: u64) -> Vec<T> {
    if n >= data.len() {
        return data.to_vec();
    }
    let mut by_class: Vec<Vec<usize>> = Vec::new();
    for (i, item) in data.iter().enumerate() {
        let l = label_of(item);
        if by_class.len() <= l {
            by_class.resize(l + 1, Vec::new());
        }
        by_class[l].push(i);
    }
    let total = data.len() as f64;
    let mut quota: Vec<(usize, f64)> = by_class
        .iter()
        .map(|idx| {
            let exact = n as f64 * idx.len() as f64 / total;
            (exact.floor() as usize, exact - exact.floor())
        })
        .collect();
    let mut short = n - quota.iter().map(|q| q.0).sum::<usize>();
    let mut by_remainder: Vec<usize> = (0..quota.len()).collect();
    by_remainder.sort_by(|&a, &b| quota[b].1.total_cmp(&quota[a].1).then(a.cmp(&b)));
    for c in by_remainder {
        if short == 0 {
            break;
        }
        if quota[c].0 < by_class[c].len() {
            quota[c].0 += 1;
            short -= 1;
        }
    }
    let mut keep = Vec::with_capacity(n);
    for (c, idx) in by_class.iter_mut().enumerate() {
        idx.shuffle(&mut substream(seed, Domain::Split, 1 + c as u64));
        keep.extend_from_slice(&idx[..quota[c].0]);
    }
    keep.sort_unstable();
    keep.into_iter().map(|i| data[i].clone()).collect()
}

/// Isotropic Gaussian classes around random means, clamped to `[0, 1]`.
///
/// Class means sit at `0.5 + 0.05·separation·z` with `z ~ N(0, I)`; samples
/// add `N(0, 0.1²)` noise per feature. Output is class-major.
pub fn synth_gaussian(
    n_features: usize,
    n_classes: usize,
    n_per_class: usize,
    separation: f64,
    seed: u64,
) -> Result<Vec<FeatureVector>> {
    if n_features == 0 || n_classes == 0 || n_per_class == 0 {
        return Err(HdcError::param("synthetic counts must be at least 1"));
    }
    if !(separation >= 0.0) || !separation.is_finite() {
        return Err(HdcError::param("separation must be a finite value >= 0"));
    }
    const NOISE: f64 = 0.1;
    let mut out = Vec::with_capacity(n_classes * n_per_class);
    for c in 0..n_classes {
        let mut rng = substream(seed, Domain::Synth, c as u64);
        let mean: Vec<f64> = (0..n_features)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                0.5 + 0.05 * separation * z
            })
            .collect();
        for _ in 0..n_per_class {
            let features = mean
                .iter()
                .map(|m| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    (m + NOISE * z).clamp(0.0, 1.0)
                })
                .collect();
            out.push(FeatureVector { features, label: c });
        }
    }
    Ok(out)
}

/// Turn feature vectors into raw records (`f0..`, label `class<k>`), e.g. to
/// write a synthetic dataset to disk.
pub fn feature_vectors_to_records(data: &[FeatureVector]) -> Vec<RawRecord> {
    data.iter()
        .map(|fv| RawRecord {
            values: fv.features.iter().map(|&x| Cell::Numeric(x)).collect(),
            label: format!("class{}", fv.label),
        })
        .collect()
}

/// Write records as CSV with the label in the last column. Numbers use the
/// shortest round-trip representation, so reloading is lossless.
pub fn write_csv<W: Write>(records: &[RawRecord], header: Option<&[String]>, writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    if let Some(h) = header {
        let mut row: Vec<String> = h.to_vec();
        row.push("label".into());
        w.write_record(&row)?;
    }
    for rec in records {
        let mut row: Vec<String> = rec
            .values
            .iter()
            .map(|c| match c {
                Cell::Numeric(v) => format!("{v:?}"),
                Cell::Categorical(s) => s.clone(),
            })
            .collect();
        row.push(rec.label.clone());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
