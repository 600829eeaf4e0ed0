//! Random bit-flip injection into stored quantized models.
//!
//! Every stored code bit flips independently with probability `p`; the sign
//! bit is a bit like any other. Scales are metadata and stay intact. Flip
//! positions are drawn by geometric skipping over the flattened bit array
//! (row-major over classes, then elements, then bits LSB first).

use std::io::Write;

use ndarray::ArrayView2;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HdcError, Result};
use crate::model::ClassModel;
use crate::quantize::{flip_code_bit, quantize_model, Bitwidth, QuantizedModel, QueryCodes};
use crate::rng::{substream, Domain};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultSpec {
    flip_probability: f64,
    seed: u64,
    stream: u64,
}

impl FaultSpec {
    pub fn new(flip_probability: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&flip_probability) {
            return Err(HdcError::param(format!(
                "flip probability must lie in [0, 1], got {flip_probability}"
            )));
        }
        Ok(Self {
            flip_probability,
            seed,
            stream: 0,
        })
    }

    /// Same probability and seed, independent substream.
    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    pub fn flip_probability(&self) -> f64 {
        self.flip_probability
    }
}

/// Corrupted copy of `qmodel` plus the number of flipped bits.
pub fn inject_counted(qmodel: &QuantizedModel, spec: &FaultSpec) -> (QuantizedModel, u64) {
    let mut out = qmodel.clone();
    let p = spec.flip_probability;
    if p == 0.0 {
        return (out, 0);
    }
    let b = qmodel.bitwidth();
    let bits = b.bits() as u64;
    let dim = qmodel.dim() as u64;
    let total = qmodel.total_bits();
    let mut rng = substream(spec.seed, Domain::Faults, spec.stream);
    let gap = Geometric::new(p).expect("p in (0, 1]");
    let mut flipped = 0u64;
    let mut pos = gap.sample(&mut rng);
    let rows = out.rows_mut();
    while pos < total {
        let elem = pos / bits;
        let bit = (pos % bits) as u32;
        let (row, col) = ((elem / dim) as usize, (elem % dim) as usize);
        let code = &mut rows[row].codes[col];
        *code = flip_code_bit(*code, bit, b);
        flipped += 1;
        pos = match pos.checked_add(1 + gap.sample(&mut rng)) {
            Some(next) => next,
            None => break,
        };
    }
    (out, flipped)
}

pub fn inject(qmodel: &QuantizedModel, spec: &FaultSpec) -> QuantizedModel {
    inject_counted(qmodel, spec).0
}

/// Copy of `qmodel` with exactly one bit flipped.
pub fn flip_single_bit(qmodel: &QuantizedModel, row: usize, elem: usize, bit: u32) -> Result<QuantizedModel> {
    let b = qmodel.bitwidth();
    if row >= qmodel.n_classes() || elem >= qmodel.dim() || bit >= b.bits() {
        return Err(HdcError::param(format!("bit ({row}, {elem}, {bit}) outside the stored model")));
    }
    let mut out = qmodel.clone();
    let code = &mut out.rows_mut()[row].codes[elem];
    *code = flip_code_bit(*code, bit, b);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub bitwidth: Bitwidth,
    pub p: f64,
    pub trial_count: usize,
    pub mean_acc: f64,
    pub std_acc: f64,
}

fn trial_stream(b: Bitwidth, p_index: usize, trial: usize) -> u64 {
    ((b.bits() as u64) << 48) | ((p_index as u64) << 24) | trial as u64
}

/// Sample mean and (n − 1)-normalized standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Accuracy under random bit flips for every `(bitwidth, p)` pair.
///
/// The model is quantized once per bitwidth; each trial draws from its own
/// substream, so results do not depend on thread count.
pub fn robustness_curve(
    model: &ClassModel,
    test: ArrayView2<f64>,
    labels: &[usize],
    bitwidths: &[Bitwidth],
    p_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<CurvePoint>> {
    if trials == 0 {
        return Err(HdcError::param("trials must be at least 1"));
    }
    if labels.is_empty() {
        return Err(HdcError::Empty("robustness curve needs a test set"));
    }
    let specs = p_grid
        .iter()
        .map(|&p| FaultSpec::new(p, seed))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(bitwidths.len() * p_grid.len());
    for &b in bitwidths {
        let qmodel = quantize_model(model, b)?;
        let queries = QueryCodes::quantize(test, b)?;
        for (pi, spec) in specs.iter().enumerate() {
            let accs = (0..trials)
                .into_par_iter()
                .map(|t| {
                    let corrupted = inject(&qmodel, &spec.with_stream(trial_stream(b, pi, t)));
                    corrupted.accuracy(&queries, labels)
                })
                .collect::<Result<Vec<_>>>()?;
            let (mean_acc, std_acc) = mean_std(&accs);
            out.push(CurvePoint {
                bitwidth: b,
                p: spec.flip_probability(),
                trial_count: trials,
                mean_acc,
                std_acc,
            });
        }
    }
    Ok(out)
}

pub const CURVE_HEADER: &str = "bitwidth,p,trial_count,mean_acc,std_acc";

pub fn write_curve_csv<W: Write>(points: &[CurvePoint], mut w: W) -> Result<()> {
    writeln!(w, "{CURVE_HEADER}")?;
    for pt in points {
        writeln!(
            w,
            "{},{:?},{},{:?},{:?}",
            pt.bitwidth, pt.p, pt.trial_count, pt.mean_acc, pt.std_acc
        )?;
    }
    Ok(())
}
