//! Random Fourier feature encoder.
//!
//! Dimension `d` of a hypervector is `cos(b_d · x + φ_d)` with base vector
//! `b_d ~ N(0, σ² I)` and phase `φ_d ~ U[0, 2π)`. Row `d` is drawn from its
//! own substream, so regenerating a handful of rows never disturbs the rest.

use std::f64::consts::TAU;
use std::io::{Read, Write};
use std::ops::Deref;

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::checkpoint::{BlobReader, BlobWriter};
use crate::dataset::FeatureVector;
use crate::error::{HdcError, Result};
use crate::rng::{substream, Domain};

/// A single encoded sample (or class accumulator).
#[derive(Debug, Clone, PartialEq)]
pub struct Hypervector(pub Vec<f64>);

impl Deref for Hypervector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Hypervector {
    fn from(v: Vec<f64>) -> Self {
        Hypervector(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderState {
    base: Array2<f64>,
    phase: Array1<f64>,
    sigma: f64,
    seed: u64,
    seed_counter: u64,
}

const ENCODER_MAGIC: &[u8; 8] = b"HDNIDSEN";
const ENCODER_VERSION: u32 = 1;

impl EncoderState {
    pub fn new(n_features: usize, dim: usize, sigma: f64, seed: u64) -> Result<Self> {
        if dim == 0 || n_features == 0 {
            return Err(HdcError::param("encoder needs dim >= 1 and n_features >= 1"));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(HdcError::param(format!("sigma must be positive, got {sigma}")));
        }
        let mut enc = EncoderState {
            base: Array2::zeros((dim, n_features)),
            phase: Array1::zeros(dim),
            sigma,
            seed,
            seed_counter: 0,
        };
        for d in 0..dim {
            enc.draw_row(d);
        }
        Ok(enc)
    }

    fn draw_row(&mut self, d: usize) {
        let mut rng = substream(self.seed, Domain::Encoder, self.seed_counter);
        self.seed_counter += 1;
        for w in self.base.row_mut(d) {
            let z: f64 = StandardNormal.sample(&mut rng);
            *w = self.sigma * z;
        }
        let u: f64 = rng.random();
        let phase = u * TAU;
        self.phase[d] = if phase < TAU { phase } else { 0.0 };
    }

    pub fn dim(&self) -> usize {
        self.base.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.base.ncols()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn seed_counter(&self) -> u64 {
        self.seed_counter
    }

    pub fn base(&self) -> &Array2<f64> {
        &self.base
    }

    pub fn phase(&self) -> &Array1<f64> {
        &self.phase
    }

    /// Overwrite the phase vector. Test hook for analytic checks.
    #[doc(hidden)]
    pub fn set_phase(&mut self, phase: Array1<f64>) {
        assert_eq!(phase.len(), self.dim());
        self.phase = phase;
    }

    #[doc(hidden)]
    pub fn set_base(&mut self, base: Array2<f64>) {
        assert_eq!(base.dim(), self.base.dim());
        self.base = base;
    }

    fn check_arity(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features() {
            return Err(HdcError::DimensionMismatch {
                expected: self.n_features(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn encode(&self, x: &FeatureVector) -> Result<Hypervector> {
        self.encode_features(&x.features)
    }

    pub fn encode_features(&self, x: &[f64]) -> Result<Hypervector> {
        self.check_arity(x)?;
        let x = ndarray::aview1(x);
        let proj = self.base.dot(&x) + &self.phase;
        Ok(Hypervector(proj.mapv(f64::cos).to_vec()))
    }

    /// Stack feature vectors into an `N × n` matrix, checking arity.
    pub fn feature_matrix(&self, xs: &[FeatureVector]) -> Result<Array2<f64>> {
        let mut m = Array2::zeros((xs.len(), self.n_features()));
        for (i, (x, mut row)) in xs.iter().zip(m.rows_mut()).enumerate() {
            self.check_arity(&x.features).map_err(|e| HdcError::at(i, e))?;
            row.assign(&ndarray::aview1(&x.features));
        }
        Ok(m)
    }

    /// Encode a batch as one `N × D` matrix (row `i` encodes `xs[i]`).
    pub fn encode_batch(&self, xs: &[FeatureVector]) -> Result<Array2<f64>> {
        let m = self.feature_matrix(xs)?;
        Ok(self.encode_matrix(m.view()))
    }

    /// Encode an `N × n` feature matrix with one matrix product.
    pub fn encode_matrix(&self, features: ArrayView2<f64>) -> Array2<f64> {
        let mut out = features.dot(&self.base.t());
        Zip::from(out.rows_mut()).for_each(|mut row| {
            Zip::from(&mut row).and(&self.phase).for_each(|h, &p| *h = (*h + p).cos());
        });
        out
    }

    /// Recompute only the columns `dims` of an encoded batch.
    pub fn reencode_dims(&self, features: ArrayView2<f64>, encoded: &mut Array2<f64>, dims: &[usize]) -> Result<()> {
        if encoded.ncols() != self.dim() || encoded.nrows() != features.nrows() {
            return Err(HdcError::DimensionMismatch {
                expected: self.dim(),
                found: encoded.ncols(),
            });
        }
        if dims.is_empty() {
            return Ok(());
        }
        self.check_dims(dims)?;
        let rows = self.base.select(Axis(0), dims);
        let proj = features.dot(&rows.t());
        for (k, &d) in dims.iter().enumerate() {
            let p = self.phase[d];
            Zip::from(encoded.column_mut(d))
                .and(proj.column(k))
                .for_each(|h, &v| *h = (v + p).cos());
        }
        Ok(())
    }

    fn check_dims(&self, dims: &[usize]) -> Result<()> {
        match dims.iter().find(|&&d| d >= self.dim()) {
            Some(&index) => Err(HdcError::IndexOutOfRange { index, dim: self.dim() }),
            None => Ok(()),
        }
    }

    /// Redraw base rows and phases of `dims` from fresh substreams.
    ///
    /// Dimensions are processed in ascending order; duplicates are ignored.
    pub fn regenerate_dims(&mut self, dims: &[usize]) -> Result<()> {
        self.check_dims(dims)?;
        let mut sorted = dims.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for d in sorted {
            self.draw_row(d);
        }
        Ok(())
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut w = BlobWriter::new(w, ENCODER_MAGIC, ENCODER_VERSION)?;
        w.u64(self.dim() as u64)?;
        w.u64(self.n_features() as u64)?;
        w.f64(self.sigma)?;
        w.u64(self.seed)?;
        w.u64(self.seed_counter)?;
        w.f64s(self.base.iter().copied())?;
        w.f64s(self.phase.iter().copied())?;
        w.finish()
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let mut r = BlobReader::new(r, ENCODER_MAGIC, ENCODER_VERSION)?;
        let dim = r.len()?;
        let n = r.len()?;
        let sigma = r.f64()?;
        let seed = r.u64()?;
        let seed_counter = r.u64()?;
        let base = r.f64s(dim.checked_mul(n).ok_or_else(|| HdcError::Checkpoint("size overflow".into()))?)?;
        let phase = r.f64s(dim)?;
        r.finish()?;
        if dim == 0 || n == 0 {
            return Err(HdcError::Checkpoint("empty encoder".into()));
        }
        Ok(EncoderState {
            base: Array2::from_shape_vec((dim, n), base).map_err(|e| HdcError::Checkpoint(e.to_string()))?,
            phase: Array1::from(phase),
            sigma,
            seed,
            seed_counter,
        })
    }
}
