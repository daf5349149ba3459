//! Adversarial-batch persistence in the shared text container format.
//!
//! One payload line per row: true label, the original feature values, then
//! the crafted values. Floats use Rust's shortest round-trip formatting, so
//! a save/load cycle is bit-exact and experiments can replay a batch
//! without re-crafting it.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{AdversarialBatch, AttackConfig};
use crate::container;
use crate::error::{Error, Result};

const KIND: &str = "advbatch";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    config: AttackConfig,
    source_model: String,
    schema_fingerprint: String,
    n_samples: usize,
    n_dims: usize,
}

pub fn save_batch(path: &Path, batch: &AdversarialBatch) -> Result<()> {
    let header = Header {
        config: batch.config,
        source_model: batch.source_model.clone(),
        schema_fingerprint: batch.schema_fingerprint.clone(),
        n_samples: batch.n_samples(),
        n_dims: batch.n_dims(),
    };
    let mut payload = Vec::with_capacity(batch.n_samples());
    for i in 0..batch.n_samples() {
        let mut line = format!("{}", batch.true_labels[i]);
        for v in batch.originals.row(i).iter().chain(batch.adversarials.row(i).iter()) {
            line.push(',');
            line.push_str(&format!("{v}"));
        }
        payload.push(line);
    }
    container::write_file(path, KIND, VERSION, &header, &payload)
}

pub fn load_batch(path: &Path) -> Result<AdversarialBatch> {
    let c = container::read_file(path, KIND, VERSION)?;
    let header: Header = c.header_as()?;
    if c.payload.len() != header.n_samples {
        return Err(Error::Container(format!(
            "header declares {} rows but payload holds {}",
            header.n_samples,
            c.payload.len()
        )));
    }

    let d = header.n_dims;
    let mut originals = Array2::zeros((header.n_samples, d));
    let mut adversarials = Array2::zeros((header.n_samples, d));
    let mut true_labels = Vec::with_capacity(header.n_samples);
    for (row, line) in c.payload.iter().enumerate() {
        let mut fields = line.split(',');
        let label: usize = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Container(format!("row {row}: bad label")))?;
        let mut col = 0;
        for field in fields {
            if col >= 2 * d {
                return Err(Error::Container(format!("row {row}: too many values")));
            }
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Container(format!("row {row}: bad value {field:?}")))?;
            if col < d {
                originals[(row, col)] = v;
            } else {
                adversarials[(row, col - d)] = v;
            }
            col += 1;
        }
        if col != 2 * d {
            return Err(Error::Container(format!(
                "row {row}: expected {} values, found {col}",
                2 * d
            )));
        }
        true_labels.push(label);
    }
    Ok(AdversarialBatch {
        originals,
        adversarials,
        true_labels,
        source_model: header.source_model,
        schema_fingerprint: header.schema_fingerprint,
        config: header.config,
    })
}
