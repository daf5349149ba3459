//! Mini-batch training: shuffled epochs, inverted dropout, Adam in its
//! canonical bias-corrected form.
//!
//! One seeded generator drives the epoch shuffles and every dropout mask in
//! a fixed draw order, so a given `(dataset, config)` pair always produces
//! bit-identical weights.

use ndarray::{Array1, Array2, Axis, Dimension, Zip};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::mlp::{Layer, MlpModel};
use super::MlpConfig;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{check_dim, Model};

/// Offset separating the training stream from the init stream, which uses
/// the raw seed.
const TRAIN_STREAM: u64 = 0x7261_696e_5f72_6e67;

/// Initialize a fresh network from the dataset's shape and train it.
pub fn train_mlp(train: &Dataset, config: &MlpConfig) -> Result<MlpModel> {
    config.validate()?;
    let n_classes = train.schema.class_names.len();
    let mut model = MlpModel::new_random(
        train.n_dims(),
        &config.hidden,
        n_classes,
        config.seed,
        train.schema_fingerprint(),
    )?;
    train_from(&mut model, train, config)?;
    Ok(model)
}

/// Train an existing network in place (warm start, or three-class refits of
/// a widened head).
pub fn train_from(model: &mut MlpModel, train: &Dataset, config: &MlpConfig) -> Result<()> {
    config.validate()?;
    if train.n_samples() == 0 {
        return Err(Error::Data("training set is empty".into()));
    }
    check_dim(model.input_dim(), train.n_dims())?;
    if model.schema_fingerprint() != train.schema_fingerprint() {
        return Err(Error::SchemaMismatch {
            model: model.schema_fingerprint().to_string(),
            data: train.schema_fingerprint(),
        });
    }
    if let Some(&bad) = train.labels.iter().find(|&&y| y >= model.n_classes()) {
        return Err(Error::Data(format!(
            "label {bad} out of range for {} classes",
            model.n_classes()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ TRAIN_STREAM);
    let mut adam = AdamState::new(&model.layers);
    let mut indices: Vec<usize> = (0..train.n_samples()).collect();
    for epoch in 0..config.epochs {
        indices.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in indices.chunks(config.batch_size) {
            let loss = train_batch(model, train, chunk, config, &mut rng, &mut adam)?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite training loss at epoch {epoch}"
                )));
            }
            epoch_loss += loss * chunk.len() as f64;
        }
        log::debug!(
            "epoch {epoch}: mean loss {}",
            epoch_loss / train.n_samples() as f64
        );
    }
    Ok(())
}

/// Bernoulli keep mask scaled by `1/(1-p)`, so expectations match the
/// dropout-free forward pass.
pub(crate) fn dropout_mask<R: Rng>(rng: &mut R, rows: usize, cols: usize, p: f64) -> Array2<f64> {
    let scale = 1.0 / (1.0 - p);
    Array2::from_shape_fn((rows, cols), |_| {
        if rng.gen::<f64>() < p {
            0.0
        } else {
            scale
        }
    })
}

/// One forward/backward/update cycle; returns the batch mean loss, checked
/// before any weight is touched.
fn train_batch(
    model: &mut MlpModel,
    data: &Dataset,
    idx: &[usize],
    config: &MlpConfig,
    rng: &mut ChaCha8Rng,
    adam: &mut AdamState,
) -> Result<f64> {
    let n_layers = model.layers.len();
    let batch = idx.len() as f64;

    // forward, keeping each layer's (post-dropout) input and pre-activation
    let mut inputs: Vec<Array2<f64>> = Vec::with_capacity(n_layers);
    let mut zs: Vec<Array2<f64>> = Vec::with_capacity(n_layers);
    let mut masks: Vec<Option<Array2<f64>>> = Vec::with_capacity(n_layers.saturating_sub(1));
    let mut current = data.matrix.select(Axis(0), idx);
    for (l, layer) in model.layers.iter().enumerate() {
        inputs.push(current);
        let z = inputs[l].dot(&layer.w.t()) + &layer.b;
        current = if l + 1 < n_layers {
            let mut act = z.mapv(|v| v.max(0.0));
            if config.dropout > 0.0 {
                let mask = dropout_mask(rng, act.nrows(), act.ncols(), config.dropout);
                act *= &mask;
                masks.push(Some(mask));
            } else {
                masks.push(None);
            }
            zs.push(z);
            act
        } else {
            zs.push(z);
            Array2::zeros((0, 0))
        };
    }

    // softmax + cross-entropy via log-sum-exp; delta = (p - onehot) / batch
    let logits = &zs[n_layers - 1];
    let mut delta = Array2::zeros(logits.raw_dim());
    let mut loss = 0.0;
    for (i, row) in logits.outer_iter().enumerate() {
        let y = data.labels[idx[i]];
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for &z in row.iter() {
            sum += (z - max).exp();
        }
        loss += max + sum.ln() - row[y];
        for (j, &z) in row.iter().enumerate() {
            delta[(i, j)] = (z - max).exp() / sum;
        }
        delta[(i, y)] -= 1.0;
    }
    loss /= batch;
    if !loss.is_finite() {
        return Ok(loss);
    }
    delta /= batch;

    adam.begin_step();
    for l in (0..n_layers).rev() {
        let gw = delta.t().dot(&inputs[l]);
        let gb = delta.sum_axis(Axis(0));
        if l > 0 {
            let mut back = delta.dot(&model.layers[l].w);
            back.zip_mut_with(&zs[l - 1], |d, &z| {
                if z <= 0.0 {
                    *d = 0.0;
                }
            });
            if let Some(mask) = &masks[l - 1] {
                back *= mask;
            }
            delta = back;
        }
        adam.update_layer(l, &mut model.layers[l], &gw, &gb, config);
    }
    Ok(loss)
}

/// First and second moment estimates per parameter tensor; `t` counts
/// completed update steps across the whole run.
struct AdamState {
    m_w: Vec<Array2<f64>>,
    v_w: Vec<Array2<f64>>,
    m_b: Vec<Array1<f64>>,
    v_b: Vec<Array1<f64>>,
    t: u32,
}

impl AdamState {
    fn new(layers: &[Layer]) -> AdamState {
        AdamState {
            m_w: layers.iter().map(|l| Array2::zeros(l.w.raw_dim())).collect(),
            v_w: layers.iter().map(|l| Array2::zeros(l.w.raw_dim())).collect(),
            m_b: layers.iter().map(|l| Array1::zeros(l.b.raw_dim())).collect(),
            v_b: layers.iter().map(|l| Array1::zeros(l.b.raw_dim())).collect(),
            t: 0,
        }
    }

    fn begin_step(&mut self) {
        self.t += 1;
    }

    fn update_layer(
        &mut self,
        l: usize,
        layer: &mut Layer,
        gw: &Array2<f64>,
        gb: &Array1<f64>,
        config: &MlpConfig,
    ) {
        adam_update(&mut layer.w, gw, &mut self.m_w[l], &mut self.v_w[l], self.t, config);
        adam_update(&mut layer.b, gb, &mut self.m_b[l], &mut self.v_b[l], self.t, config);
    }
}

/// Canonical Adam: explicit bias-corrected moments, epsilon added outside
/// the square root.
fn adam_update<D: Dimension>(
    param: &mut ndarray::Array<f64, D>,
    grad: &ndarray::Array<f64, D>,
    m: &mut ndarray::Array<f64, D>,
    v: &mut ndarray::Array<f64, D>,
    t: u32,
    config: &MlpConfig,
) {
    let bc1 = 1.0 - config.beta1.powf(t as f64);
    let bc2 = 1.0 - config.beta2.powf(t as f64);
    Zip::from(param)
        .and(grad)
        .and(m)
        .and(v)
        .for_each(|p, &g, m, v| {
            *m = config.beta1 * *m + (1.0 - config.beta1) * g;
            *v = config.beta2 * *v + (1.0 - config.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
        });
}
