//! Network structure, forward pass, and exact gradients.

use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{argmax_tie_lowest, check_dim, fingerprint_bytes, GradientModel, Model};

/// One dense layer; weights are `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Layer {
    pub fn out_dim(&self) -> usize {
        self.b.len()
    }

    pub fn in_dim(&self) -> usize {
        self.w.ncols()
    }
}

/// ReLU-activated MLP with a softmax head. Hidden layers may be absent, in
/// which case it degenerates to multinomial logistic regression.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
    schema_fingerprint: String,
}

impl MlpModel {
    /// He-uniform initialization: each weight uniform in
    /// `±sqrt(6 / fan_in)`, biases zero. Draw order is layer by layer,
    /// row-major, so a seed pins every parameter.
    pub fn new_random(
        input_dim: usize,
        hidden: &[usize],
        n_classes: usize,
        seed: u64,
        schema_fingerprint: String,
    ) -> Result<MlpModel> {
        if input_dim == 0 {
            return Err(Error::Config("input_dim must be positive".into()));
        }
        if n_classes < 2 {
            return Err(Error::Config(format!(
                "need at least 2 classes, got {n_classes}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut fan_in = input_dim;
        for &out in hidden.iter().chain(std::iter::once(&n_classes)) {
            let limit = (6.0 / fan_in as f64).sqrt();
            let w = Array2::from_shape_fn((out, fan_in), |_| rng.gen_range(-limit..limit));
            layers.push(Layer {
                w,
                b: Array1::zeros(out),
            });
            fan_in = out;
        }
        Ok(MlpModel {
            layers,
            schema_fingerprint,
        })
    }

    pub fn from_layers(layers: Vec<Layer>, schema_fingerprint: String) -> Result<MlpModel> {
        if layers.is_empty() {
            return Err(Error::Config("a network needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::DimensionMismatch {
                    expected: pair[0].out_dim(),
                    got: pair[1].in_dim(),
                });
            }
        }
        Ok(MlpModel {
            layers,
            schema_fingerprint,
        })
    }

    /// Pre-activations of every layer in inference mode (no dropout).
    /// `zs[last]` holds the logits.
    fn forward(&self, x: ArrayView1<f64>) -> Vec<Array1<f64>> {
        let mut zs = Vec::with_capacity(self.layers.len());
        let mut h = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.w.dot(&h) + &layer.b;
            if i + 1 < self.layers.len() {
                h = z.mapv(|v| v.max(0.0));
            }
            zs.push(z);
        }
        zs
    }

    pub fn logits(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_dim(self.input_dim(), x.len())?;
        Ok(self.forward(x).pop().expect("at least one layer"))
    }

    fn check_class(&self, y: usize) -> Result<()> {
        if y >= self.n_classes() {
            return Err(Error::Data(format!(
                "class id {y} out of range for {} classes",
                self.n_classes()
            )));
        }
        Ok(())
    }
}

/// Softmax with max subtraction, safe for logits of any magnitude.
pub(crate) fn softmax(logits: &Array1<f64>) -> Array1<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp = logits.mapv(|z| (z - max).exp());
    let sum = exp.sum();
    exp / sum
}

/// `ln(sum(exp(z)))` via the max trick.
pub(crate) fn log_sum_exp(logits: &Array1<f64>) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + logits.mapv(|z| (z - max).exp()).sum().ln()
}

impl Model for MlpModel {
    fn name(&self) -> &str {
        "dnn"
    }

    fn n_classes(&self) -> usize {
        self.layers.last().expect("at least one layer").out_dim()
    }

    fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    fn schema_fingerprint(&self) -> &str {
        &self.schema_fingerprint
    }

    fn predict_proba(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        Ok(softmax(&self.logits(x)?))
    }

    fn predict(&self, x: ArrayView1<f64>) -> Result<usize> {
        let p = self.predict_proba(x)?;
        Ok(argmax_tie_lowest(p.as_slice().expect("contiguous")))
    }

    fn fingerprint(&self) -> String {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(self.schema_fingerprint.as_bytes());
        for layer in &self.layers {
            bytes.extend_from_slice(&layer.out_dim().to_le_bytes());
            bytes.extend_from_slice(&layer.in_dim().to_le_bytes());
            for v in layer.w.iter().chain(layer.b.iter()) {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        fingerprint_bytes(&bytes)
    }
}

impl GradientModel for MlpModel {
    /// Cross-entropy through log-sum-exp: `lse(z) - z[y]`, exact and
    /// overflow-free.
    fn loss(&self, x: ArrayView1<f64>, y: usize) -> Result<f64> {
        self.check_class(y)?;
        let logits = self.logits(x)?;
        Ok(log_sum_exp(&logits) - logits[y])
    }

    fn input_gradient(&self, x: ArrayView1<f64>, y: usize) -> Result<Array1<f64>> {
        self.check_class(y)?;
        check_dim(self.input_dim(), x.len())?;
        let zs = self.forward(x);
        let logits = zs.last().expect("at least one layer");
        let mut delta = softmax(logits);
        delta[y] -= 1.0;
        // Walk back: through each layer's weights, gating by the ReLU of the
        // pre-activation below (derivative 0 at the kink).
        for l in (0..self.layers.len()).rev() {
            let back = self.layers[l].w.t().dot(&delta);
            if l == 0 {
                return Ok(back);
            }
            delta = back * zs[l - 1].mapv(|z| if z > 0.0 { 1.0 } else { 0.0 });
        }
        unreachable!("loop returns at layer 0")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng;

    fn fp() -> String {
        "test-schema".to_string()
    }

    fn single_layer(w: Array2<f64>, b: Array1<f64>) -> MlpModel {
        MlpModel::from_layers(vec![Layer { w, b }], fp()).unwrap()
    }

    #[test]
    fn zero_final_layer_gives_uniform_probabilities() {
        let m = single_layer(Array2::zeros((3, 4)), Array1::zeros(3));
        let p = m.predict_proba(array![0.2, 0.9, 0.1, 0.5].view()).unwrap();
        for &v in p.iter() {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(m.predict(array![0.2, 0.9, 0.1, 0.5].view()).unwrap(), 0);
    }

    #[test]
    fn softmax_survives_extreme_logits() {
        let m = single_layer(array![[1e4], [-1e4]], Array1::zeros(2));
        let x = array![1.0];
        let p = m.predict_proba(x.view()).unwrap();
        assert!(p.iter().all(|v| v.is_finite()));
        assert!((p.sum() - 1.0).abs() < 1e-12);
        assert!((p[0] - 1.0).abs() < 1e-12);
        // loss of the losing class is the logit gap, exactly
        assert!((m.loss(x.view(), 1).unwrap() - 2e4).abs() < 1e-9);
        assert!(m.loss(x.view(), 0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn single_layer_gradient_matches_closed_form() {
        // No hidden layers: dJ/dx = sum_k p_k w_k - w_y
        let w = array![[0.3, -0.7, 0.2], [-0.5, 0.4, 0.9]];
        let b = array![0.1, -0.2];
        let m = single_layer(w.clone(), b);
        let x = array![0.25, 0.5, 0.75];
        let p = m.predict_proba(x.view()).unwrap();
        for y in 0..2 {
            let g = m.input_gradient(x.view(), y).unwrap();
            for j in 0..3 {
                let expect = p[0] * w[(0, j)] + p[1] * w[(1, j)] - w[(y, j)];
                assert!((g[j] - expect).abs() < 1e-14, "y={y} j={j}");
            }
        }
    }

    #[test]
    fn zero_network_has_zero_gradient() {
        let m = MlpModel::from_layers(
            vec![
                Layer {
                    w: Array2::zeros((4, 3)),
                    b: Array1::zeros(4),
                },
                Layer {
                    w: Array2::zeros((2, 4)),
                    b: Array1::zeros(2),
                },
            ],
            fp(),
        )
        .unwrap();
        let g = m.input_gradient(array![0.1, 0.9, 0.4].view(), 1).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dimension_and_class_checks() {
        let m = single_layer(Array2::zeros((2, 3)), Array1::zeros(2));
        assert!(m.predict_proba(array![0.1, 0.2].view()).is_err());
        assert!(m.loss(array![0.1, 0.2, 0.3].view(), 2).is_err());
        assert!(m
            .input_gradient(array![0.1, 0.2, 0.3].view(), 5)
            .is_err());
    }

    #[test]
    fn seeded_init_is_reproducible() {
        let a = MlpModel::new_random(5, &[8, 8], 2, 7, fp()).unwrap();
        let b = MlpModel::new_random(5, &[8, 8], 2, 7, fp()).unwrap();
        let c = MlpModel::new_random(5, &[8, 8], 2, 8, fp()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), c.fingerprint());
        // He-uniform bound for fan_in 5
        let limit = (6.0f64 / 5.0).sqrt();
        assert!(a.layers[0].w.iter().all(|v| v.abs() < limit));
        assert!(a.layers[0].b.iter().all(|&v| v == 0.0));
    }

    /// Central finite differences of the forward loss; independent of the
    /// backward pass under test.
    fn fd_gradient(m: &MlpModel, x: &Array1<f64>, y: usize, h: f64) -> Array1<f64> {
        let mut g = Array1::zeros(x.len());
        for i in 0..x.len() {
            let mut hi = x.clone();
            hi[i] += h;
            let mut lo = x.clone();
            lo[i] -= h;
            g[i] = (m.loss(hi.view(), y).unwrap() - m.loss(lo.view(), y).unwrap()) / (2.0 * h);
        }
        g
    }

    /// Smallest |pre-activation| across hidden units; bounds how close the
    /// input sits to a ReLU kink.
    fn min_hidden_margin(m: &MlpModel, x: &Array1<f64>) -> f64 {
        let mut margin = f64::INFINITY;
        let mut h = x.clone();
        for (i, layer) in m.layers.iter().enumerate() {
            if i + 1 == m.layers.len() {
                break;
            }
            let z = layer.w.dot(&h) + &layer.b;
            for &v in z.iter() {
                margin = margin.min(v.abs());
            }
            h = z.mapv(|v| v.max(0.0));
        }
        margin
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 160, ..ProptestConfig::default() })]

        #[test]
        fn analytic_gradient_matches_finite_differences(
            seed in any::<u64>(),
            input_dim in 2usize..6,
            h1 in 2usize..7,
            h2 in 0usize..5,
            n_classes in 2usize..4,
        ) {
            let hidden: Vec<usize> = if h2 == 0 { vec![h1] } else { vec![h1, h2] };
            let m = MlpModel::new_random(input_dim, &hidden, n_classes, seed, fp()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
            let x = Array1::from_shape_fn(input_dim, |_| rng.gen_range(0.0..1.0));
            let y = rng.gen_range(0..n_classes);

            // stay clear of ReLU kinks so the difference quotient is smooth
            prop_assume!(min_hidden_margin(&m, &x) > 1e-2);

            let h = 1e-4;
            let analytic = m.input_gradient(x.view(), y).unwrap();
            let numeric = fd_gradient(&m, &x, y, h);
            for i in 0..input_dim {
                let diff = (analytic[i] - numeric[i]).abs();
                let scale = analytic[i].abs().max(numeric[i].abs()).max(1e-6);
                prop_assert!(
                    diff / scale < 1e-3,
                    "dim {}: analytic {} vs fd {}",
                    i, analytic[i], numeric[i]
                );
            }
        }
    }
}
