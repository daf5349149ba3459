//! Dataset persistence in the shared text container format.
//!
//! One payload line per row: class id, family, then every feature value.
//! Floats are written with Rust's shortest round-trip formatting, so a
//! save/load cycle is bit-exact.

use std::path::Path;
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::families::Family;
use super::{Dataset, Schema};
use crate::container;
use crate::error::{Error, Result};

const KIND: &str = "dataset";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    schema: Schema,
    n_samples: usize,
    n_dims: usize,
}

pub fn save_dataset(path: &Path, ds: &Dataset) -> Result<()> {
    let header = Header {
        schema: (*ds.schema).clone(),
        n_samples: ds.n_samples(),
        n_dims: ds.n_dims(),
    };
    let mut payload = Vec::with_capacity(ds.n_samples());
    for i in 0..ds.n_samples() {
        let mut line = format!("{},{}", ds.labels[i], ds.families[i].as_str());
        for v in ds.matrix.row(i) {
            line.push(',');
            line.push_str(&format!("{v}"));
        }
        payload.push(line);
    }
    container::write_file(path, KIND, VERSION, &header, &payload)
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let c = container::read_file(path, KIND, VERSION)?;
    let header: Header = c.header_as()?;
    if header.schema.dims.len() != header.n_dims {
        return Err(Error::Container(format!(
            "header declares {} dims but schema describes {}",
            header.n_dims,
            header.schema.dims.len()
        )));
    }
    if c.payload.len() != header.n_samples {
        return Err(Error::Container(format!(
            "header declares {} rows but payload holds {}",
            header.n_samples,
            c.payload.len()
        )));
    }

    let n_classes = header.schema.class_names.len();
    let mut matrix = Array2::zeros((header.n_samples, header.n_dims));
    let mut labels = Vec::with_capacity(header.n_samples);
    let mut families = Vec::with_capacity(header.n_samples);
    for (row, line) in c.payload.iter().enumerate() {
        let mut fields = line.split(',');
        let label: usize = fields
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Container(format!("row {row}: bad class id")))?;
        if label >= n_classes {
            return Err(Error::Container(format!(
                "row {row}: class id {label} out of range for {n_classes} classes"
            )));
        }
        let family = fields
            .next()
            .ok_or_else(|| Error::Container(format!("row {row}: missing family")))
            .and_then(Family::from_str)?;
        let mut col = 0;
        for field in fields {
            if col >= header.n_dims {
                return Err(Error::Container(format!("row {row}: too many values")));
            }
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Container(format!("row {row}: bad value {field:?}")))?;
            matrix[(row, col)] = v;
            col += 1;
        }
        if col != header.n_dims {
            return Err(Error::Container(format!(
                "row {row}: expected {} values, found {col}",
                header.n_dims
            )));
        }
        labels.push(label);
        families.push(family);
    }
    Ok(Dataset {
        matrix,
        labels,
        families,
        schema: Arc::new(header.schema),
    })
}
