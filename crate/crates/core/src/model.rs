//! Unified classifier contracts.
//!
//! Every detector (the MLP surrogate and the five classical victims)
//! implements [`Model`]. Attack crafting additionally requires
//! [`GradientModel`], which exposes the loss and its exact gradient with
//! respect to the input.

use ndarray::{Array1, ArrayView1};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub trait Model: Send + Sync {
    /// Short name used in reports ("dnn", "svm", ...).
    fn name(&self) -> &str;
    fn n_classes(&self) -> usize;
    fn input_dim(&self) -> usize;
    /// Fingerprint of the feature schema the model was fitted on.
    fn schema_fingerprint(&self) -> &str;
    /// Class probabilities; entries are non-negative and sum to 1.
    fn predict_proba(&self, x: ArrayView1<f64>) -> Result<Array1<f64>>;
    /// Predicted class id. Ties break toward the lowest class id.
    fn predict(&self, x: ArrayView1<f64>) -> Result<usize>;
    /// Parameter fingerprint, stable across identically-seeded fits.
    fn fingerprint(&self) -> String;
}

/// A model whose loss is differentiable with respect to its input.
pub trait GradientModel: Model {
    /// Cross-entropy loss of the true class `y` at input `x`, inference mode.
    fn loss(&self, x: ArrayView1<f64>, y: usize) -> Result<f64>;
    /// Exact gradient of `loss` with respect to `x` (analytic backprop).
    fn input_gradient(&self, x: ArrayView1<f64>, y: usize) -> Result<Array1<f64>>;
}

/// Index of the maximum value; ties resolve to the lowest index.
pub fn argmax_tie_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Short hex fingerprint (truncated SHA-256) of serialized bytes.
pub fn fingerprint_bytes(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}
