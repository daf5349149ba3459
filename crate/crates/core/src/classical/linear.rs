//! Linear one-vs-rest classifiers: L2-regularized logistic regression and a
//! linear soft-margin SVM, both fitted by deterministic full-batch descent.
//!
//! One binary unit per class, scored against the rest; with two classes the
//! units are exact mirrors, so the single-discriminant behavior falls out.

use ndarray::{Array1, ArrayView1};
#[cfg(test)]
use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;

/// One binary discriminant: `score(x) = w . x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearUnit {
    pub w: Array1<f64>,
    pub b: f64,
}

impl LinearUnit {
    fn zeros(dim: usize) -> LinearUnit {
        LinearUnit {
            w: Array1::zeros(dim),
            b: 0.0,
        }
    }

    pub fn score(&self, x: ArrayView1<f64>) -> f64 {
        self.w.dot(&x) + self.b
    }
}

pub fn scores(units: &[LinearUnit], x: ArrayView1<f64>) -> Array1<f64> {
    Array1::from_iter(units.iter().map(|u| u.score(x)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegHyper {
    pub l2: f64,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for LogRegHyper {
    fn default() -> Self {
        LogRegHyper {
            l2: 1e-4,
            epochs: 500,
            learning_rate: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmHyper {
    /// Inverse regularization strength; the ridge weight is `1 / (n * c)`.
    pub c: f64,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for SvmHyper {
    fn default() -> Self {
        SvmHyper {
            c: 1.0,
            epochs: 1000,
            learning_rate: 0.5,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean cross-entropy gradient plus `l2 * w`, full batch, fixed step.
pub fn fit_logreg(data: &Dataset, n_classes: usize, hyper: &LogRegHyper) -> Vec<LinearUnit> {
    let x = data.matrix.view();
    let n = data.n_samples() as f64;
    (0..n_classes)
        .map(|k| {
            let targets: Vec<f64> = data
                .labels
                .iter()
                .map(|&y| if y == k { 1.0 } else { 0.0 })
                .collect();
            let mut unit = LinearUnit::zeros(data.n_dims());
            let mut final_loss = f64::NAN;
            for _ in 0..hyper.epochs {
                let z = x.dot(&unit.w) + unit.b;
                let mut gw = Array1::zeros(data.n_dims());
                let mut gb = 0.0;
                let mut loss = 0.0;
                for (i, (&zi, &t)) in z.iter().zip(&targets).enumerate() {
                    let p = sigmoid(zi);
                    let r = p - t;
                    gw.scaled_add(r, &x.row(i));
                    gb += r;
                    // stable cross-entropy: max(z,0) - z t + ln(1+e^-|z|)
                    loss += zi.max(0.0) - zi * t + (-zi.abs()).exp().ln_1p();
                }
                gw.mapv_inplace(|g| g / n);
                gw.scaled_add(hyper.l2, &unit.w);
                unit.w.scaled_add(-hyper.learning_rate, &gw);
                unit.b -= hyper.learning_rate * gb / n;
                final_loss = loss / n;
            }
            log::debug!("logreg unit {k}: final loss {final_loss}");
            unit
        })
        .collect()
}

/// Hinge subgradient with a decaying step `lr / sqrt(t+1)`; the ridge term
/// `||w||^2 / (2 n c)` matches the usual per-sample hinge scaling.
pub fn fit_svm(data: &Dataset, n_classes: usize, hyper: &SvmHyper) -> Vec<LinearUnit> {
    let x = data.matrix.view();
    let n = data.n_samples() as f64;
    let lambda = 1.0 / (n * hyper.c);
    (0..n_classes)
        .map(|k| {
            let signs: Vec<f64> = data
                .labels
                .iter()
                .map(|&y| if y == k { 1.0 } else { -1.0 })
                .collect();
            let mut unit = LinearUnit::zeros(data.n_dims());
            let mut active = 0usize;
            for t in 0..hyper.epochs {
                let lr = hyper.learning_rate / ((t + 1) as f64).sqrt();
                let z = x.dot(&unit.w) + unit.b;
                let mut gw = unit.w.mapv(|w| lambda * w);
                let mut gb = 0.0;
                active = 0;
                for (i, (&zi, &s)) in z.iter().zip(&signs).enumerate() {
                    if s * zi < 1.0 {
                        active += 1;
                        gw.scaled_add(-s / n, &x.row(i));
                        gb -= s / n;
                    }
                }
                unit.w.scaled_add(-lr, &gw);
                unit.b -= lr * gb;
            }
            log::debug!("svm unit {k}: {active} margin violations at final epoch");
            unit
        })
        .collect()
}

/// One-vs-rest probabilities for logistic units: per-class sigmoids,
/// normalized to sum to 1.
pub fn logreg_proba(units: &[LinearUnit], x: ArrayView1<f64>) -> Array1<f64> {
    let mut p = Array1::from_iter(units.iter().map(|u| sigmoid(u.score(x))));
    let sum = p.sum();
    if sum > 0.0 {
        p /= sum;
    } else {
        p.fill(1.0 / units.len() as f64);
    }
    p
}

/// Margin scores mapped through softmax; uncalibrated but ordered.
pub fn svm_proba(units: &[LinearUnit], x: ArrayView1<f64>) -> Array1<f64> {
    let s = scores(units, x);
    crate::nn::softmax(&s)
}

/// Smallest signed margin `y * score` over a dataset, for unit `k`.
#[cfg(test)]
pub fn min_margin(unit: &LinearUnit, x: ArrayView2<f64>, labels: &[usize], k: usize) -> f64 {
    let mut min = f64::INFINITY;
    for (i, &y) in labels.iter().enumerate() {
        let s = if y == k { 1.0 } else { -1.0 };
        min = min.min(s * unit.score(x.row(i)));
    }
    min
}
