//! Network persistence: one payload line per output unit, weights then bias,
//! shortest round-trip float formatting.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::mlp::{Layer, MlpModel};
use crate::container;
use crate::error::{Error, Result};
use crate::model::Model;

const KIND: &str = "model";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    model: String,
    schema_fingerprint: String,
    /// `(in, out)` of each layer in forward order.
    layer_dims: Vec<(usize, usize)>,
}

pub fn save_mlp(path: &Path, model: &MlpModel) -> Result<()> {
    let header = Header {
        model: model.name().to_string(),
        schema_fingerprint: model.schema_fingerprint().to_string(),
        layer_dims: model
            .layers
            .iter()
            .map(|l| (l.in_dim(), l.out_dim()))
            .collect(),
    };
    let mut payload = Vec::new();
    for layer in &model.layers {
        for (row, &bias) in layer.w.outer_iter().zip(layer.b.iter()) {
            let mut line = String::new();
            for v in row {
                line.push_str(&format!("{v} "));
            }
            line.push_str(&format!("{bias}"));
            payload.push(line);
        }
    }
    container::write_file(path, KIND, VERSION, &header, &payload)
}

pub fn load_mlp(path: &Path) -> Result<MlpModel> {
    let c = container::read_file(path, KIND, VERSION)?;
    let header: Header = c.header_as()?;
    if header.model != "dnn" {
        return Err(Error::Container(format!(
            "file holds a {:?} model, expected \"dnn\"",
            header.model
        )));
    }
    let expected_lines: usize = header.layer_dims.iter().map(|&(_, out)| out).sum();
    if c.payload.len() != expected_lines {
        return Err(Error::Container(format!(
            "expected {expected_lines} weight lines, found {}",
            c.payload.len()
        )));
    }

    let mut lines = c.payload.iter();
    let mut layers = Vec::with_capacity(header.layer_dims.len());
    for &(in_dim, out_dim) in &header.layer_dims {
        let mut w = Array2::zeros((out_dim, in_dim));
        let mut b = Array1::zeros(out_dim);
        for unit in 0..out_dim {
            let line = lines.next().expect("count checked above");
            let values = line
                .split_whitespace()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::Container(format!("bad weight value {s:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if values.len() != in_dim + 1 {
                return Err(Error::Container(format!(
                    "weight line holds {} values, expected {}",
                    values.len(),
                    in_dim + 1
                )));
            }
            for (j, &v) in values[..in_dim].iter().enumerate() {
                w[(unit, j)] = v;
            }
            b[unit] = values[in_dim];
        }
        layers.push(Layer { w, b });
    }
    MlpModel::from_layers(layers, header.schema_fingerprint)
}
