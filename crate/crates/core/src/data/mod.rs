//! Dataset ingestion, preprocessing, and partitioning.

mod families;
mod fixture;
mod persist;
mod preprocess;
mod raw;
mod split;

pub use families::{family_of, Family, ALL_FAMILIES};
pub use fixture::synth_fixture;
pub use persist::{load_dataset, save_dataset};
pub use preprocess::{fit_preprocessor, transform, Preprocessor};
pub use raw::{
    is_categorical, load_nslkdd, parse_nslkdd, RawDataset, RawRecord, CATEGORICAL_FEATURES,
    FEATURE_NAMES, NUM_FEATURES,
};
pub use split::{plan_split, split, split_raw, SplitIndices, SplitSpec};

use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::model::fingerprint_bytes;

/// How raw labels map to class ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelMode {
    /// `normal` -> 0, any attack -> 1.
    Binary,
    /// As binary, with a third `adversarial` class reserved for crafted rows.
    TernaryWithAdversarial,
}

impl LabelMode {
    pub fn class_names(&self) -> Vec<String> {
        match self {
            LabelMode::Binary => vec!["normal".into(), "intrusion".into()],
            LabelMode::TernaryWithAdversarial => {
                vec!["normal".into(), "intrusion".into(), "adversarial".into()]
            }
        }
    }
}

/// One output dimension of the transformed feature space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimDescriptor {
    /// Source feature name, e.g. `duration` or `protocol_type`.
    pub feature: String,
    /// One-hot token for categorical sources, `None` for numeric.
    pub token: Option<String>,
}

/// Ordered description of the transformed feature space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub dims: Vec<DimDescriptor>,
    pub class_names: Vec<String>,
}

impl Schema {
    /// Stable fingerprint over dimension descriptors and class names.
    pub fn fingerprint(&self) -> String {
        let mut text = String::new();
        for d in &self.dims {
            text.push_str(&d.feature);
            if let Some(tok) = &d.token {
                text.push('=');
                text.push_str(tok);
            }
            text.push(';');
        }
        text.push('|');
        text.push_str(&self.class_names.join(";"));
        fingerprint_bytes(text.as_bytes())
    }
}

/// Numeric dataset: rows in `[0,1]`, one class id and one traffic family per row.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub matrix: Array2<f64>,
    pub labels: Vec<usize>,
    /// Traffic family per row; drives stratified splitting.
    pub families: Vec<Family>,
    pub schema: Arc<Schema>,
}

impl Dataset {
    pub fn n_samples(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_dims(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn schema_fingerprint(&self) -> String {
        self.schema.fingerprint()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut matrix = Array2::zeros((indices.len(), self.n_dims()));
        for (row, &i) in indices.iter().enumerate() {
            matrix.row_mut(row).assign(&self.matrix.row(i));
        }
        Dataset {
            matrix,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            families: indices.iter().map(|&i| self.families[i]).collect(),
            schema: Arc::clone(&self.schema),
        }
    }
}
