//! Low-bitwidth quantization of hypervectors and class models.
//!
//! `b = 1` keeps the sign (`sign(0) = +1`) with the mean magnitude as scale.
//! `b ≥ 2` is symmetric uniform quantization, `scale = max|v| / (2^(b−1) − 1)`
//! and codes rounded half away from zero. Similarities are cosines of the
//! integer codes, so per-vector scales cancel.

use std::io::{Read, Write};

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::checkpoint::{BlobReader, BlobWriter};
use crate::error::{HdcError, Result};
use crate::model::{argmax, dot, norm, ClassModel, Prediction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum Bitwidth {
    B1,
    B2,
    B4,
    B8,
    B16,
    B32,
}

impl Bitwidth {
    /// Widest first.
    pub const ALL: [Bitwidth; 6] = [
        Bitwidth::B32,
        Bitwidth::B16,
        Bitwidth::B8,
        Bitwidth::B4,
        Bitwidth::B2,
        Bitwidth::B1,
    ];

    pub fn bits(self) -> u32 {
        match self {
            Bitwidth::B1 => 1,
            Bitwidth::B2 => 2,
            Bitwidth::B4 => 4,
            Bitwidth::B8 => 8,
            Bitwidth::B16 => 16,
            Bitwidth::B32 => 32,
        }
    }

    pub fn from_bits(bits: u32) -> Result<Self> {
        match bits {
            1 => Ok(Bitwidth::B1),
            2 => Ok(Bitwidth::B2),
            4 => Ok(Bitwidth::B4),
            8 => Ok(Bitwidth::B8),
            16 => Ok(Bitwidth::B16),
            32 => Ok(Bitwidth::B32),
            other => Err(HdcError::UnsupportedBitwidth(other)),
        }
    }

    /// Inclusive code range.
    pub fn code_range(self) -> (i64, i64) {
        match self {
            Bitwidth::B1 => (-1, 1),
            b => {
                let half = 1i64 << (b.bits() - 1);
                (-half, half - 1)
            }
        }
    }

    pub fn contains(self, code: i32) -> bool {
        match self {
            Bitwidth::B1 => code == 1 || code == -1,
            b => {
                let (lo, hi) = b.code_range();
                (lo..=hi).contains(&(code as i64))
            }
        }
    }
}

impl TryFrom<u32> for Bitwidth {
    type Error = HdcError;

    fn try_from(bits: u32) -> Result<Self> {
        Bitwidth::from_bits(bits)
    }
}

impl From<Bitwidth> for u32 {
    fn from(b: Bitwidth) -> u32 {
        b.bits()
    }
}

impl std::fmt::Display for Bitwidth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.bits())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedVector {
    pub bitwidth: Bitwidth,
    pub codes: Vec<i32>,
    pub scale: f64,
}

pub fn quantize_vec(v: &[f64], bitwidth: Bitwidth) -> Result<QuantizedVector> {
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(HdcError::param(format!("non-finite element at index {i}")));
    }
    let (codes, scale) = match bitwidth {
        Bitwidth::B1 => {
            let codes = v.iter().map(|&x| if x >= 0.0 { 1 } else { -1 }).collect();
            let mean_abs = if v.is_empty() {
                0.0
            } else {
                v.iter().map(|x| x.abs()).sum::<f64>() / v.len() as f64
            };
            (codes, if mean_abs > 0.0 { mean_abs } else { 1.0 })
        }
        b => {
            let (lo, hi) = b.code_range();
            let max_abs = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if max_abs == 0.0 {
                (vec![0; v.len()], 1.0)
            } else {
                let scale = max_abs / hi as f64;
                let codes = v
                    .iter()
                    .map(|&x| ((x / scale).round() as i64).clamp(lo, hi) as i32)
                    .collect();
                (codes, scale)
            }
        }
    };
    Ok(QuantizedVector { bitwidth, codes, scale })
}

impl QuantizedVector {
    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn dequantize(&self) -> Vec<f64> {
        self.codes.iter().map(|&c| c as f64 * self.scale).collect()
    }

    fn codes_f64(&self) -> Vec<f64> {
        self.codes.iter().map(|&c| c as f64).collect()
    }

    /// Codes as `b`-bit two's complement, LSB first, concatenated. For
    /// `b = 1` bit set means `+1`.
    pub fn pack(&self) -> Vec<u8> {
        pack_codes(&self.codes, self.bitwidth)
    }
}

fn code_to_bits(code: i32, b: Bitwidth) -> u32 {
    match b {
        Bitwidth::B1 => (code > 0) as u32,
        Bitwidth::B32 => code as u32,
        b => (code as u32) & ((1u32 << b.bits()) - 1),
    }
}

fn bits_to_code(bits: u32, b: Bitwidth) -> i32 {
    match b {
        Bitwidth::B1 => {
            if bits & 1 == 1 {
                1
            } else {
                -1
            }
        }
        Bitwidth::B32 => bits as i32,
        b => {
            let shift = 32 - b.bits();
            ((bits << shift) as i32) >> shift
        }
    }
}

/// Flip bit `bit` (0 = least significant) of a stored code.
pub fn flip_code_bit(code: i32, bit: u32, b: Bitwidth) -> i32 {
    debug_assert!(bit < b.bits());
    bits_to_code(code_to_bits(code, b) ^ (1u32 << bit), b)
}

pub fn pack_codes(codes: &[i32], b: Bitwidth) -> Vec<u8> {
    let bits = b.bits() as usize;
    let mut out = vec![0u8; (codes.len() * bits).div_ceil(8)];
    for (i, &c) in codes.iter().enumerate() {
        let v = code_to_bits(c, b);
        for k in 0..bits {
            if (v >> k) & 1 == 1 {
                let pos = i * bits + k;
                out[pos / 8] |= 1 << (pos % 8);
            }
        }
    }
    out
}

pub fn unpack_codes(packed: &[u8], len: usize, b: Bitwidth) -> Result<Vec<i32>> {
    let bits = b.bits() as usize;
    if packed.len() != (len * bits).div_ceil(8) {
        return Err(HdcError::Checkpoint("packed code length mismatch".into()));
    }
    Ok((0..len)
        .map(|i| {
            let mut v = 0u32;
            for k in 0..bits {
                let pos = i * bits + k;
                v |= (((packed[pos / 8] >> (pos % 8)) & 1) as u32) << k;
            }
            bits_to_code(v, b)
        })
        .collect())
}

fn check_pair(a: &QuantizedVector, b: &QuantizedVector) -> Result<()> {
    if a.bitwidth != b.bitwidth {
        return Err(HdcError::param(format!(
            "bitwidth mismatch: {} vs {}",
            a.bitwidth, b.bitwidth
        )));
    }
    if a.len() != b.len() {
        return Err(HdcError::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}

/// Cosine of the integer code vectors; 0 if either is all-zero.
pub fn quantized_similarity(a: &QuantizedVector, b: &QuantizedVector) -> Result<f64> {
    check_pair(a, b)?;
    let (x, y) = (a.codes_f64(), b.codes_f64());
    let (nx, ny) = (norm(&x), norm(&y));
    if nx == 0.0 || ny == 0.0 {
        return Ok(0.0);
    }
    Ok(dot(&x, &y) / (nx * ny))
}

/// `1 − 2·hamming/D` on packed sign bits; only defined for `b = 1`.
pub fn hamming_similarity(a: &QuantizedVector, b: &QuantizedVector) -> Result<f64> {
    check_pair(a, b)?;
    if a.bitwidth != Bitwidth::B1 {
        return Err(HdcError::param("hamming similarity needs 1-bit codes"));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let (pa, pb) = (a.pack(), b.pack());
    let ham: u32 = pa.iter().zip(&pb).map(|(x, y)| (x ^ y).count_ones()).sum();
    Ok(1.0 - 2.0 * ham as f64 / a.len() as f64)
}

/// Bit operations of one quantized dot product: `D · b`.
pub fn bit_ops_per_dot(dim: usize, b: Bitwidth) -> u64 {
    dim as u64 * b.bits() as u64
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedModel {
    bitwidth: Bitwidth,
    rows: Vec<QuantizedVector>,
}

const QMODEL_MAGIC: &[u8; 8] = b"HDNIDSQM";
const QMODEL_VERSION: u32 = 1;

pub fn quantize_model(model: &ClassModel, bitwidth: Bitwidth) -> Result<QuantizedModel> {
    let rows = (0..model.n_classes())
        .map(|l| quantize_vec(model.row(l), bitwidth))
        .collect::<Result<Vec<_>>>()?;
    Ok(QuantizedModel { bitwidth, rows })
}

impl QuantizedModel {
    pub fn from_rows(rows: Vec<QuantizedVector>) -> Result<Self> {
        let first = rows.first().ok_or(HdcError::Empty("quantized model rows"))?;
        let (bitwidth, dim) = (first.bitwidth, first.len());
        for r in &rows {
            if r.bitwidth != bitwidth || r.len() != dim {
                return Err(HdcError::param("rows must share bitwidth and length"));
            }
            if let Some(&c) = r.codes.iter().find(|&&c| !bitwidth.contains(c)) {
                return Err(HdcError::param(format!("code {c} out of range for {bitwidth}-bit")));
            }
            if !(r.scale > 0.0 && r.scale.is_finite()) {
                return Err(HdcError::param("scales must be positive and finite"));
            }
        }
        Ok(Self { bitwidth, rows })
    }

    pub fn bitwidth(&self) -> Bitwidth {
        self.bitwidth
    }

    pub fn rows(&self) -> &[QuantizedVector] {
        &self.rows
    }

    pub(crate) fn rows_mut(&mut self) -> &mut [QuantizedVector] {
        &mut self.rows
    }

    pub fn n_classes(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }

    /// Total number of stored code bits.
    pub fn total_bits(&self) -> u64 {
        (self.n_classes() * self.dim()) as u64 * self.bitwidth.bits() as u64
    }

    pub fn predict(&self, q: &QuantizedVector) -> Result<Prediction> {
        let scores = self
            .rows
            .iter()
            .map(|r| quantized_similarity(q, r))
            .collect::<Result<Vec<_>>>()?;
        Ok(Prediction {
            class_index: argmax(&scores),
            scores,
        })
    }

    fn code_matrix(&self) -> Array2<f64> {
        let mut m = Array2::zeros((self.n_classes(), self.dim()));
        for (mut dst, r) in m.rows_mut().into_iter().zip(&self.rows) {
            for (d, &c) in dst.iter_mut().zip(&r.codes) {
                *d = c as f64;
            }
        }
        m
    }

    /// Predicted class for every query, via one matrix product.
    pub fn predict_batch(&self, queries: &QueryCodes) -> Result<Vec<usize>> {
        if queries.bitwidth != self.bitwidth || queries.codes.ncols() != self.dim() {
            return Err(HdcError::param("queries do not match the quantized model"));
        }
        let m = self.code_matrix();
        let row_norms: Vec<f64> = m.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
        let s = queries.codes.dot(&m.t());
        Ok(s.rows()
            .into_iter()
            .zip(&queries.norms)
            .map(|(row, &nq)| {
                let scores: Vec<f64> = row
                    .iter()
                    .zip(&row_norms)
                    .map(|(&d, &nc)| if nq == 0.0 || nc == 0.0 { 0.0 } else { d / (nq * nc) })
                    .collect();
                argmax(&scores)
            })
            .collect())
    }

    pub fn accuracy(&self, queries: &QueryCodes, labels: &[usize]) -> Result<f64> {
        if labels.len() != queries.codes.nrows() {
            return Err(HdcError::DimensionMismatch {
                expected: queries.codes.nrows(),
                found: labels.len(),
            });
        }
        if labels.is_empty() {
            return Err(HdcError::Empty("accuracy needs at least one sample"));
        }
        let pred = self.predict_batch(queries)?;
        Ok(pred.iter().zip(labels).filter(|(p, l)| p == l).count() as f64 / labels.len() as f64)
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut w = BlobWriter::new(w, QMODEL_MAGIC, QMODEL_VERSION)?;
        w.u8(self.bitwidth.bits() as u8)?;
        w.u64(self.n_classes() as u64)?;
        w.u64(self.dim() as u64)?;
        w.f64s(self.rows.iter().map(|r| r.scale))?;
        for r in &self.rows {
            w.bytes(&r.pack())?;
        }
        w.finish()
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = BlobReader::new(r, QMODEL_MAGIC, QMODEL_VERSION)?;
        let bitwidth = Bitwidth::from_bits(r.u8()? as u32)?;
        let l = r.len()?;
        let d = r.len()?;
        let scales = r.f64s(l)?;
        let packed_len = (d * bitwidth.bits() as usize).div_ceil(8);
        let rows = scales
            .into_iter()
            .map(|scale| {
                let packed = r.bytes(packed_len)?;
                Ok(QuantizedVector {
                    bitwidth,
                    codes: unpack_codes(&packed, d, bitwidth)?,
                    scale,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        r.finish()?;
        Self::from_rows(rows).map_err(|e| HdcError::Checkpoint(e.to_string()))
    }
}

/// A batch of quantized queries held as a code matrix for fast scoring.
#[derive(Debug, Clone)]
pub struct QueryCodes {
    bitwidth: Bitwidth,
    codes: Array2<f64>,
    norms: Vec<f64>,
}

impl QueryCodes {
    /// Quantize every row of `hs` at `bitwidth`.
    pub fn quantize(hs: ArrayView2<f64>, bitwidth: Bitwidth) -> Result<Self> {
        let mut codes = Array2::zeros(hs.dim());
        for (src, mut dst) in hs.rows().into_iter().zip(codes.rows_mut()) {
            let src = src.as_standard_layout();
            let q = quantize_vec(src.as_slice().expect("standard layout"), bitwidth)?;
            for (d, c) in dst.iter_mut().zip(q.codes) {
                *d = c as f64;
            }
        }
        let norms = codes.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
        Ok(Self { bitwidth, codes, norms })
    }

    pub fn len(&self) -> usize {
        self.codes.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.nrows() == 0
    }
}
