//! Class hypervectors with similarity-weighted retraining.
//!
//! A mispredicted sample `H` with true class `l` and predicted class `l'`
//! moves the model by `C_l += η(1 − δ_l)·H` and `C_l' −= η(1 − δ_l')·H`,
//! where `δ` is the cosine similarity. Samples close to what a class already
//! stores (δ near 1) barely move it; novel ones (δ near 0) move it a lot.
//!
//! Two rules fill in what the update leaves open:
//! * a class whose hypervector is still all-zero has stored nothing, so a
//!   sample of that class always counts as a miss and seeds the row;
//! * an all-zero row is never penalized.

use std::io::{Read, Write};

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::checkpoint::{BlobReader, BlobWriter};
use crate::error::{HdcError, Result};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    acc.iter().sum::<f64>() + tail
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn cosine_with_norms(d: f64, na: f64, nb: f64) -> f64 {
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        d / (na * nb)
    }
}

/// Cosine similarity; 0 when either vector has zero norm.
pub fn similarity(h: &[f64], c: &[f64]) -> Result<f64> {
    if h.len() != c.len() {
        return Err(HdcError::DimensionMismatch {
            expected: h.len(),
            found: c.len(),
        });
    }
    Ok(cosine_with_norms(dot(h, c), norm(h), norm(c)))
}

/// Index of the largest score; the lowest index wins ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub class_index: usize,
    pub scores: Vec<f64>,
}

/// What one call to [`ClassModel::adaptive_update`] did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpdateOutcome {
    pub predicted: usize,
    /// The sample counted as a miss and the model moved.
    pub updated: bool,
    /// Number of rows that changed (0, 1 or 2).
    pub rows_changed: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub error_rate: f64,
    pub misses: usize,
    /// Multiply-accumulates spent on similarities and row updates.
    pub mac_ops: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassModel {
    classes: Array2<f64>,
    sq_norms: Vec<f64>,
    eta: f64,
    effective_dim: usize,
}

const MODEL_MAGIC: &[u8; 8] = b"HDNIDSMD";
const MODEL_VERSION: u32 = 1;

impl ClassModel {
    /// All-zero model with `effective_dim = dim`.
    pub fn new(n_classes: usize, dim: usize, eta: f64) -> Result<Self> {
        if n_classes < 2 {
            return Err(HdcError::param(format!("need at least 2 classes, got {n_classes}")));
        }
        if dim == 0 {
            return Err(HdcError::param("dimension must be at least 1"));
        }
        Self::from_parts(Array2::zeros((n_classes, dim)), eta, dim)
    }

    pub fn from_parts(classes: Array2<f64>, eta: f64, effective_dim: usize) -> Result<Self> {
        if !(eta > 0.0) || !eta.is_finite() {
            return Err(HdcError::param(format!("learning rate must be positive, got {eta}")));
        }
        if classes.nrows() < 2 || classes.ncols() == 0 {
            return Err(HdcError::param("model needs at least 2 classes and 1 dimension"));
        }
        if effective_dim < classes.ncols() {
            return Err(HdcError::param("effective dimension below physical dimension"));
        }
        if classes.iter().any(|v| !v.is_finite()) {
            return Err(HdcError::param("class hypervectors must be finite"));
        }
        let sq_norms = classes
            .rows()
            .into_iter()
            .map(|r| {
                let r = r.as_standard_layout();
                let s = r.as_slice().expect("standard layout");
                dot(s, s)
            })
            .collect();
        Ok(Self {
            classes,
            sq_norms,
            eta,
            effective_dim,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.classes.nrows()
    }

    pub fn dim(&self) -> usize {
        self.classes.ncols()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn effective_dim(&self) -> usize {
        self.effective_dim
    }

    pub fn classes(&self) -> &Array2<f64> {
        &self.classes
    }

    pub fn row(&self, l: usize) -> &[f64] {
        self.classes.row(l).to_slice().expect("rows are contiguous")
    }

    /// Record `k` freshly regenerated dimensions.
    pub fn add_regenerated(&mut self, k: usize) {
        self.effective_dim += k;
    }

    fn refresh_norm(&mut self, l: usize) {
        let r = self.row(l);
        self.sq_norms[l] = dot(r, r);
    }

    fn check_len(&self, h: &[f64]) -> Result<()> {
        if h.len() != self.dim() {
            return Err(HdcError::DimensionMismatch {
                expected: self.dim(),
                found: h.len(),
            });
        }
        Ok(())
    }

    fn scores_unchecked(&self, h: &[f64]) -> Vec<f64> {
        let nh = norm(h);
        (0..self.n_classes())
            .map(|l| cosine_with_norms(dot(h, self.row(l)), nh, self.sq_norms[l].sqrt()))
            .collect()
    }

    /// Cosine similarity of `h` to every class.
    pub fn scores(&self, h: &[f64]) -> Result<Vec<f64>> {
        self.check_len(h)?;
        Ok(self.scores_unchecked(h))
    }

    pub fn predict(&self, h: &[f64]) -> Result<Prediction> {
        let scores = self.scores(h)?;
        Ok(Prediction {
            class_index: argmax(&scores),
            scores,
        })
    }

    /// One similarity-weighted update step.
    pub fn adaptive_update(&mut self, h: &[f64], label: usize) -> Result<UpdateOutcome> {
        self.check_len(h)?;
        if label >= self.n_classes() {
            return Err(HdcError::LabelOutOfRange {
                label,
                n_classes: self.n_classes(),
            });
        }
        let scores = self.scores_unchecked(h);
        let predicted = argmax(&scores);
        let true_row_empty = self.sq_norms[label] == 0.0;
        if predicted == label && !true_row_empty {
            return Ok(UpdateOutcome {
                predicted,
                updated: false,
                rows_changed: 0,
            });
        }
        let mut rows_changed = 0;
        let gain = self.eta * (1.0 - scores[label]);
        self.axpy(label, gain, h);
        rows_changed += 1;
        if predicted != label && self.sq_norms[predicted] != 0.0 {
            let penalty = self.eta * (1.0 - scores[predicted]);
            self.axpy(predicted, -penalty, h);
            rows_changed += 1;
        }
        Ok(UpdateOutcome {
            predicted,
            updated: true,
            rows_changed,
        })
    }

    fn axpy(&mut self, l: usize, w: f64, h: &[f64]) {
        if w == 0.0 {
            return;
        }
        let mut row = self.classes.row_mut(l);
        let row = row.as_slice_mut().expect("rows are contiguous");
        for (c, &x) in row.iter_mut().zip(h) {
            *c += w * x;
        }
        self.refresh_norm(l);
    }

    fn check_batch(&self, hs: &ArrayView2<f64>, labels: &[usize]) -> Result<()> {
        if hs.nrows() != labels.len() {
            return Err(HdcError::DimensionMismatch {
                expected: hs.nrows(),
                found: labels.len(),
            });
        }
        if hs.ncols() != self.dim() {
            return Err(HdcError::DimensionMismatch {
                expected: self.dim(),
                found: hs.ncols(),
            });
        }
        Ok(())
    }

    /// Initial single pass over the encoded training set, in input order.
    pub fn bundle_train(&mut self, hs: ArrayView2<f64>, labels: &[usize]) -> Result<EpochStats> {
        self.retrain_epoch(hs, labels)
    }

    /// One sequential pass of [`Self::adaptive_update`]. The error rate
    /// counts samples that were misses at the moment they were visited.
    pub fn retrain_epoch(&mut self, hs: ArrayView2<f64>, labels: &[usize]) -> Result<EpochStats> {
        self.check_batch(&hs, labels)?;
        let (l, d) = (self.n_classes() as u64, self.dim() as u64);
        let mut misses = 0;
        let mut mac_ops = 0u64;
        for (i, (h, &label)) in hs.rows().into_iter().zip(labels).enumerate() {
            let h = h.as_standard_layout();
            let out = self
                .adaptive_update(h.as_slice().expect("standard layout"), label)
                .map_err(|e| HdcError::at(i, e))?;
            // norm of h plus one dot per class, then axpy + norm per changed row
            mac_ops += (l + 1) * d + 2 * d * out.rows_changed as u64;
            if out.updated {
                misses += 1;
            }
        }
        let error_rate = if labels.is_empty() {
            0.0
        } else {
            misses as f64 / labels.len() as f64
        };
        Ok(EpochStats {
            error_rate,
            misses,
            mac_ops,
        })
    }

    /// Copy with every nonzero row scaled to unit L2 norm.
    pub fn normalized(&self) -> ClassModel {
        let mut out = self.clone();
        for (l, mut row) in out.classes.axis_iter_mut(Axis(0)).enumerate() {
            let n = self.sq_norms[l].sqrt();
            if n > 0.0 {
                row.mapv_inplace(|v| v / n);
            }
        }
        for l in 0..out.n_classes() {
            out.refresh_norm(l);
        }
        out
    }

    /// Zero the given dimensions in every class row.
    pub fn zero_columns(&mut self, dims: &[usize]) -> Result<()> {
        if let Some(&index) = dims.iter().find(|&&d| d >= self.dim()) {
            return Err(HdcError::IndexOutOfRange { index, dim: self.dim() });
        }
        for &d in dims {
            self.classes.column_mut(d).fill(0.0);
        }
        for l in 0..self.n_classes() {
            self.refresh_norm(l);
        }
        Ok(())
    }

    /// `N × L` cosine scores via one matrix product.
    pub fn scores_batch(&self, hs: ArrayView2<f64>) -> Result<Array2<f64>> {
        if hs.ncols() != self.dim() {
            return Err(HdcError::DimensionMismatch {
                expected: self.dim(),
                found: hs.ncols(),
            });
        }
        let mut s = hs.dot(&self.classes.t());
        let class_norms: Vec<f64> = self.sq_norms.iter().map(|v| v.sqrt()).collect();
        for (h, mut row) in hs.rows().into_iter().zip(s.rows_mut()) {
            let nh = h.dot(&h).sqrt();
            for (v, &nc) in row.iter_mut().zip(&class_norms) {
                *v = cosine_with_norms(*v, nh, nc);
            }
        }
        Ok(s)
    }

    pub fn predict_batch(&self, hs: ArrayView2<f64>) -> Result<Vec<usize>> {
        let s = self.scores_batch(hs)?;
        Ok(s.rows()
            .into_iter()
            .map(|r| argmax(r.as_slice().expect("standard layout")))
            .collect())
    }

    /// Fraction of rows of `hs` predicted as their label.
    pub fn accuracy(&self, hs: ArrayView2<f64>, labels: &[usize]) -> Result<f64> {
        self.check_batch(&hs, labels)?;
        if labels.is_empty() {
            return Err(HdcError::Empty("accuracy needs at least one sample"));
        }
        let pred = self.predict_batch(hs)?;
        let hits = pred.iter().zip(labels).filter(|(p, l)| p == l).count();
        Ok(hits as f64 / labels.len() as f64)
    }

    /// `confusion[true][predicted]` counts.
    pub fn confusion(&self, hs: ArrayView2<f64>, labels: &[usize]) -> Result<Vec<Vec<usize>>> {
        self.check_batch(&hs, labels)?;
        let mut m = vec![vec![0usize; self.n_classes()]; self.n_classes()];
        for (p, &l) in self.predict_batch(hs)?.into_iter().zip(labels) {
            if l >= self.n_classes() {
                return Err(HdcError::LabelOutOfRange {
                    label: l,
                    n_classes: self.n_classes(),
                });
            }
            m[l][p] += 1;
        }
        Ok(m)
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut w = BlobWriter::new(w, MODEL_MAGIC, MODEL_VERSION)?;
        w.u64(self.n_classes() as u64)?;
        w.u64(self.dim() as u64)?;
        w.f64(self.eta)?;
        w.u64(self.effective_dim as u64)?;
        w.f64s(self.classes.iter().copied())?;
        w.finish()
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = BlobReader::new(r, MODEL_MAGIC, MODEL_VERSION)?;
        let l = r.len()?;
        let d = r.len()?;
        let eta = r.f64()?;
        let effective_dim = r.len()?;
        let data = r.f64s(l.checked_mul(d).ok_or_else(|| HdcError::Checkpoint("size overflow".into()))?)?;
        r.finish()?;
        let classes = Array2::from_shape_vec((l, d), data).map_err(|e| HdcError::Checkpoint(e.to_string()))?;
        Self::from_parts(classes, eta, effective_dim).map_err(|e| HdcError::Checkpoint(e.to_string()))
    }
}
