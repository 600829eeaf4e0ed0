//! Hyperdimensional classification with dynamic dimension regeneration.
//!
//! Pipeline: [`dataset`] turns CSV records into `[0, 1]` feature vectors,
//! [`encoder`] maps them to hyperspace with random Fourier features,
//! [`model`] trains class hypervectors with similarity-weighted updates, and
//! [`regen`] periodically swaps the least discriminative dimensions for fresh
//! random ones. [`quantize`] and [`faults`] evaluate trained models at low
//! bitwidth and under random bit flips.

pub(crate) mod checkpoint;
pub mod dataset;
pub mod encoder;
pub mod error;
pub mod faults;
pub mod model;
pub mod quantize;
pub mod regen;
pub mod rng;

pub use dataset::{FeatureVector, RawRecord};
pub use encoder::{EncoderState, Hypervector};
pub use error::{HdcError, Result};
pub use model::{ClassModel, Prediction};
pub use quantize::{Bitwidth, QuantizedModel, QuantizedVector};
pub use regen::{fit, FitConfig, RegenReport, RegenSchedule};

/// Multiply-accumulates to classify one raw sample: encoding (`n·D`) plus
/// one dot product per class (`L·D`).
pub fn inference_mac_ops(n_features: usize, n_classes: usize, dim: usize) -> u64 {
    ((n_features + n_classes) * dim) as u64
}
