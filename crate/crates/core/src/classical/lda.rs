//! Linear discriminant analysis: shared pooled covariance with ridge
//! shrinkage, solved by a hand-rolled Cholesky factorization.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdaHyper {
    /// Ridge added to the pooled covariance, scaled by `trace/d`; also the
    /// absolute floor when the covariance is entirely zero.
    pub ridge: f64,
}

impl Default for LdaHyper {
    fn default() -> Self {
        LdaHyper { ridge: 1e-6 }
    }
}

/// Per-class linear discriminants `delta_k(x) = beta_k . x + gamma_k`.
/// Classes absent from the training data keep `gamma = -inf` and never win.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaParams {
    pub betas: Array2<f64>,
    pub gammas: Array1<f64>,
}

pub fn fit_lda(
    x: ArrayView2<f64>,
    labels: &[usize],
    n_classes: usize,
    hyper: &LdaHyper,
) -> Result<LdaParams> {
    let n = labels.len();
    let d = x.ncols();

    let mut counts = vec![0usize; n_classes];
    for &y in labels {
        counts[y] += 1;
    }
    let present: Vec<usize> = (0..n_classes).filter(|&k| counts[k] > 0).collect();

    let mut means = Array2::zeros((n_classes, d));
    for (i, &y) in labels.iter().enumerate() {
        let mut row = means.row_mut(y);
        row += &x.row(i);
    }
    for &k in &present {
        let mut row = means.row_mut(k);
        row /= counts[k] as f64;
    }

    // pooled within-class scatter, normalized by n - (number of classes)
    let mut cov = Array2::zeros((d, d));
    for (i, &y) in labels.iter().enumerate() {
        let dev = &x.row(i) - &means.row(y);
        for a in 0..d {
            if dev[a] == 0.0 {
                continue;
            }
            for b in a..d {
                cov[(a, b)] += dev[a] * dev[b];
            }
        }
    }
    let dof = (n.saturating_sub(present.len())).max(1) as f64;
    for a in 0..d {
        for b in a..d {
            cov[(a, b)] /= dof;
            cov[(b, a)] = cov[(a, b)];
        }
    }

    let trace: f64 = (0..d).map(|a| cov[(a, a)]).sum();
    let ridge = if trace > 0.0 {
        hyper.ridge * trace / d as f64
    } else {
        hyper.ridge
    };
    for a in 0..d {
        cov[(a, a)] += ridge;
    }

    let chol = cholesky(&cov)?;
    let mut betas = Array2::zeros((n_classes, d));
    let mut gammas = Array1::from_elem(n_classes, f64::NEG_INFINITY);
    for &k in &present {
        let mu = means.row(k).to_owned();
        let beta = solve_spd(&chol, &mu);
        let prior = counts[k] as f64 / n as f64;
        gammas[k] = -0.5 * mu.dot(&beta) + prior.ln();
        betas.row_mut(k).assign(&beta);
    }
    Ok(LdaParams { betas, gammas })
}

impl LdaParams {
    pub fn discriminants(&self, x: ArrayView1<f64>) -> Array1<f64> {
        self.betas.dot(&x) + &self.gammas
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
fn cholesky(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    let mut l: Array2<f64> = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if !(sum > 0.0) {
                    return Err(Error::Numeric(format!(
                        "covariance not positive definite at pivot {i}"
                    )));
                }
                l[(i, i)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Solve `A z = rhs` given the Cholesky factor of A: forward then backward
/// substitution.
fn solve_spd(l: &Array2<f64>, rhs: &Array1<f64>) -> Array1<f64> {
    let n = rhs.len();
    let mut y = Array1::zeros(n);
    for i in 0..n {
        let mut sum = rhs[i];
        for k in 0..i {
            sum -= l[(i, k)] * y[k];
        }
        y[i] = sum / l[(i, i)];
    }
    let mut z = Array1::zeros(n);
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[(k, i)] * z[k];
        }
        z[i] = sum / l[(i, i)];
    }
    z
}
