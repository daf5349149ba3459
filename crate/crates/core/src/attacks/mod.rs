//! Gradient-based evasion attacks: FGSM and PGD under an L-infinity budget
//! with unit-box constraints.
//!
//! Both attacks run through one signed-ascent code path, so PGD with a
//! single step of size epsilon and no random start reproduces FGSM
//! bit-for-bit. Batches are crafted once against the gradient-bearing
//! surrogate and replayed unchanged against every victim.

mod persist;

pub use persist::{load_batch, save_batch};

use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::GradientModel;
use crate::seeds;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttackMethod {
    Fgsm,
    Pgd,
}

pub const ALL_METHODS: [AttackMethod; 2] = [AttackMethod::Fgsm, AttackMethod::Pgd];

impl AttackMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            AttackMethod::Fgsm => "fgsm",
            AttackMethod::Pgd => "pgd",
        }
    }

    pub fn from_str(s: &str) -> Result<AttackMethod> {
        ALL_METHODS
            .iter()
            .find(|m| m.as_str() == s)
            .copied()
            .ok_or_else(|| Error::Config(format!("unknown attack method {s:?}")))
    }
}

/// Attack settings. The `pgd_*` and `random_start` fields are ignored when
/// the method is FGSM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub method: AttackMethod,
    /// L-infinity budget in scaled-feature units.
    pub epsilon: f64,
    /// PGD step size; `None` selects `epsilon / 4`.
    pub pgd_step: Option<f64>,
    pub pgd_iters: usize,
    /// Start PGD from a uniform point in the epsilon-ball instead of at x.
    pub random_start: bool,
    /// Master seed; row i of a batch draws from a stream derived from it.
    pub seed: u64,
}

impl AttackConfig {
    pub fn fgsm(epsilon: f64, seed: u64) -> AttackConfig {
        AttackConfig {
            method: AttackMethod::Fgsm,
            ..AttackConfig::pgd(epsilon, seed)
        }
    }

    /// Canonical PGD: 10 iterations of `epsilon / 4` steps from a random
    /// start.
    pub fn pgd(epsilon: f64, seed: u64) -> AttackConfig {
        AttackConfig {
            method: AttackMethod::Pgd,
            epsilon,
            pgd_step: None,
            pgd_iters: 10,
            random_start: true,
            seed,
        }
    }

    pub fn with_method(method: AttackMethod, epsilon: f64, seed: u64) -> AttackConfig {
        match method {
            AttackMethod::Fgsm => AttackConfig::fgsm(epsilon, seed),
            AttackMethod::Pgd => AttackConfig::pgd(epsilon, seed),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_epsilon(self.epsilon)?;
        if let Some(a) = self.pgd_step {
            if !a.is_finite() || a <= 0.0 {
                return Err(Error::Config(format!(
                    "pgd_step must be finite and positive, got {a}"
                )));
            }
        }
        Ok(())
    }

    fn step_size(&self) -> f64 {
        self.pgd_step.unwrap_or(self.epsilon / 4.0)
    }
}

/// Crafted rows plus everything needed to replay them: the originals, the
/// true labels, the crafting config, and the source model's fingerprint.
#[derive(Debug, Clone, PartialEq)]
pub struct AdversarialBatch {
    pub originals: Array2<f64>,
    pub adversarials: Array2<f64>,
    pub true_labels: Vec<usize>,
    pub source_model: String,
    pub schema_fingerprint: String,
    pub config: AttackConfig,
}

impl AdversarialBatch {
    pub fn n_samples(&self) -> usize {
        self.adversarials.nrows()
    }

    pub fn n_dims(&self) -> usize {
        self.adversarials.ncols()
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::Config(format!(
            "epsilon must be finite and non-negative, got {epsilon}"
        )));
    }
    Ok(())
}

/// Componentwise sign with `sign(0) = 0`.
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Componentwise clamp to `[x - eps, x + eps]`, then to `[0, 1]`.
fn project(cur: &mut Array1<f64>, x: ArrayView1<f64>, epsilon: f64) {
    for (c, &xi) in cur.iter_mut().zip(x.iter()) {
        *c = c.clamp(xi - epsilon, xi + epsilon).clamp(0.0, 1.0);
    }
}

/// Signed-gradient ascent on the loss of the true class, starting from
/// `start` and projecting every iterate back onto the epsilon-ball around
/// `x` intersected with the unit box.
fn ascend<M: GradientModel + ?Sized>(
    model: &M,
    x: ArrayView1<f64>,
    y: usize,
    epsilon: f64,
    alpha: f64,
    iters: usize,
    start: Array1<f64>,
) -> Result<Array1<f64>> {
    let mut cur = start;
    for _ in 0..iters {
        let grad = model.input_gradient(cur.view(), y)?;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numeric("non-finite input gradient".into()));
        }
        for (c, &g) in cur.iter_mut().zip(grad.iter()) {
            *c += alpha * sign(g);
        }
        project(&mut cur, x, epsilon);
    }
    Ok(cur)
}

/// Single-step attack: `clip(x + epsilon * sign(grad J(x, y)))`.
pub fn fgsm<M: GradientModel + ?Sized>(
    model: &M,
    x: ArrayView1<f64>,
    y: usize,
    epsilon: f64,
) -> Result<Array1<f64>> {
    check_epsilon(epsilon)?;
    ascend(model, x, y, epsilon, epsilon, 1, x.to_owned())
}

/// Iterated signed-gradient ascent with projection, per `cfg`.
pub fn pgd<M: GradientModel + ?Sized>(
    model: &M,
    x: ArrayView1<f64>,
    y: usize,
    cfg: &AttackConfig,
) -> Result<Array1<f64>> {
    cfg.validate()?;
    pgd_seeded(model, x, y, cfg, cfg.seed)
}

/// PGD body with the randomness stream made explicit, so batch crafting can
/// hand each row its own seed.
fn pgd_seeded<M: GradientModel + ?Sized>(
    model: &M,
    x: ArrayView1<f64>,
    y: usize,
    cfg: &AttackConfig,
    seed: u64,
) -> Result<Array1<f64>> {
    let start = if cfg.random_start && cfg.epsilon > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = x.to_owned();
        for v in s.iter_mut() {
            *v = (*v + rng.gen_range(-cfg.epsilon..cfg.epsilon)).clamp(0.0, 1.0);
        }
        s
    } else {
        x.to_owned()
    };
    ascend(model, x, y, cfg.epsilon, cfg.step_size(), cfg.pgd_iters, start)
}

fn craft_row<M: GradientModel + ?Sized>(
    model: &M,
    x: ArrayView1<f64>,
    y: usize,
    cfg: &AttackConfig,
    row_seed: u64,
) -> Result<Array1<f64>> {
    match cfg.method {
        AttackMethod::Fgsm => ascend(model, x, y, cfg.epsilon, cfg.epsilon, 1, x.to_owned()),
        AttackMethod::Pgd => pgd_seeded(model, x, y, cfg, row_seed),
    }
}

/// Apply the configured attack to every row of `data` against its true
/// label (untargeted loss ascent). Rows are independent and crafted in
/// parallel; row i draws randomness from a stream derived from `cfg.seed`
/// and i, so the result does not depend on scheduling.
pub fn craft_batch<M: GradientModel + ?Sized + Sync>(
    model: &M,
    data: &Dataset,
    cfg: &AttackConfig,
) -> Result<AdversarialBatch> {
    cfg.validate()?;
    let data_fp = data.schema_fingerprint();
    if data_fp != model.schema_fingerprint() {
        return Err(Error::SchemaMismatch {
            model: model.schema_fingerprint().to_string(),
            data: data_fp,
        });
    }
    let rows = (0..data.n_samples())
        .into_par_iter()
        .map(|i| {
            craft_row(
                model,
                data.matrix.row(i),
                data.labels[i],
                cfg,
                seeds::derive_seed(cfg.seed, i as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut adversarials = Array2::zeros((data.n_samples(), data.n_dims()));
    for (i, row) in rows.iter().enumerate() {
        adversarials.row_mut(i).assign(row);
    }
    Ok(AdversarialBatch {
        originals: data.matrix.clone(),
        adversarials,
        true_labels: data.labels.clone(),
        source_model: model.fingerprint(),
        schema_fingerprint: data_fp,
        config: *cfg,
    })
}
