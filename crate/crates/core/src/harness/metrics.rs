//! Scoring of model verdicts against ground truth.
//!
//! Every experiment reduces to the same shape: a list of [`Verdict`]s from
//! one model and a parallel list of [`Truth`]s saying what each row really
//! was. [`compute_metrics`] turns one such pair into flat metric records
//! keyed by the report cell they belong to.

use serde::{Deserialize, Serialize};

use crate::defense::Verdict;
use crate::error::{Error, Result};

/// Metric emitted for every cell in accuracy mode.
pub const ACCURACY: &str = "accuracy";
/// Accuracy over the rows whose underlying label is 0.
pub const ACCURACY_NORMAL: &str = "accuracy_normal";
/// Accuracy over the rows whose underlying label is nonzero.
pub const ACCURACY_ATTACK: &str = "accuracy_attack";
/// Rejection-aware accuracy emitted in robust mode.
pub const ROBUST_ACCURACY: &str = "robust_accuracy";
/// Fraction of all rows rejected.
pub const REJECTION_RATE: &str = "rejection_rate";
/// Fraction of clean rows rejected (false alarms).
pub const CLEAN_REJECTION_RATE: &str = "clean_rejection_rate";
/// Fraction of adversarial rows rejected (caught perturbations).
pub const ADVERSARIAL_DETECTION_RATE: &str = "adversarial_detection_rate";

/// What one evaluated row really is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Truth {
    /// Unperturbed record carrying its class label.
    Clean(usize),
    /// Perturbed record carrying the label of the row it was crafted from.
    Adversarial(usize),
}

impl Truth {
    /// The underlying class label, regardless of perturbation status.
    pub fn label(&self) -> usize {
        match self {
            Truth::Clean(y) | Truth::Adversarial(y) => *y,
        }
    }

    pub fn is_adversarial(&self) -> bool {
        matches!(self, Truth::Adversarial(_))
    }
}

/// How verdicts are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Plain classification accuracy; a rejection is a contract violation
    /// because ordinary classifiers cannot abstain.
    Accuracy,
    /// Rejection-aware scoring: rejecting an adversarial row is a success,
    /// rejecting a clean row is an error.
    Robust,
}

/// Coordinates of one evaluation cell in the report grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub experiment: String,
    pub method: String,
    pub epsilon: f64,
    pub model: String,
}

impl Cell {
    fn record(&self, metric: &str, value: f64, n_samples: usize) -> MetricRecord {
        MetricRecord {
            experiment: self.experiment.clone(),
            method: self.method.clone(),
            epsilon: self.epsilon,
            model: self.model.clone(),
            metric: metric.to_owned(),
            value,
            n_samples,
        }
    }
}

/// One metric value for one cell. `n_samples` is the size of the
/// population the value was computed over, which is smaller than the row
/// count for per-population metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub experiment: String,
    pub method: String,
    pub epsilon: f64,
    pub model: String,
    pub metric: String,
    pub value: f64,
    pub n_samples: usize,
}

fn ratio(hits: usize, total: usize) -> f64 {
    hits as f64 / total as f64
}

/// Score one cell's verdicts.
///
/// Accuracy mode emits [`ACCURACY`] over all rows plus [`ACCURACY_NORMAL`]
/// and [`ACCURACY_ATTACK`] over the label-0 and nonzero-label populations;
/// a population metric is omitted when its population is empty.
///
/// Robust mode counts a clean row as handled when it is classified with
/// its label (a rejected clean row is an error) and an adversarial row as
/// handled when it is either rejected or classified with its source label.
/// It emits [`ROBUST_ACCURACY`] and [`REJECTION_RATE`] over all rows, plus
/// [`CLEAN_REJECTION_RATE`] and [`ADVERSARIAL_DETECTION_RATE`] over their
/// populations when non-empty.
pub fn compute_metrics(
    cell: &Cell,
    predictions: &[Verdict],
    truth: &[Truth],
    mode: EvalMode,
) -> Result<Vec<MetricRecord>> {
    if predictions.len() != truth.len() {
        return Err(Error::Data(format!(
            "{} predictions against {} truth rows",
            predictions.len(),
            truth.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::Data("no rows to score".to_owned()));
    }
    let n = predictions.len();

    match mode {
        EvalMode::Accuracy => {
            let mut hits = 0usize;
            let mut pop_hits = [0usize; 2];
            let mut pop_n = [0usize; 2];
            for (pred, t) in predictions.iter().zip(truth) {
                let c = match pred {
                    Verdict::Class(c) => *c,
                    Verdict::Rejected => {
                        return Err(Error::Data(
                            "accuracy mode cannot score a rejection".to_owned(),
                        ))
                    }
                };
                let bucket = usize::from(t.label() != 0);
                pop_n[bucket] += 1;
                if c == t.label() {
                    hits += 1;
                    pop_hits[bucket] += 1;
                }
            }
            let mut out = vec![cell.record(ACCURACY, ratio(hits, n), n)];
            if pop_n[0] > 0 {
                out.push(cell.record(ACCURACY_NORMAL, ratio(pop_hits[0], pop_n[0]), pop_n[0]));
            }
            if pop_n[1] > 0 {
                out.push(cell.record(ACCURACY_ATTACK, ratio(pop_hits[1], pop_n[1]), pop_n[1]));
            }
            Ok(out)
        }
        EvalMode::Robust => {
            let mut handled = 0usize;
            let mut rejected = 0usize;
            let mut n_clean = 0usize;
            let mut n_adv = 0usize;
            let mut clean_rejected = 0usize;
            let mut adv_rejected = 0usize;
            for (pred, t) in predictions.iter().zip(truth) {
                let is_rejection = matches!(pred, Verdict::Rejected);
                rejected += usize::from(is_rejection);
                if t.is_adversarial() {
                    n_adv += 1;
                    adv_rejected += usize::from(is_rejection);
                    if is_rejection || *pred == Verdict::Class(t.label()) {
                        handled += 1;
                    }
                } else {
                    n_clean += 1;
                    clean_rejected += usize::from(is_rejection);
                    if *pred == Verdict::Class(t.label()) {
                        handled += 1;
                    }
                }
            }
            let mut out = vec![
                cell.record(ROBUST_ACCURACY, ratio(handled, n), n),
                cell.record(REJECTION_RATE, ratio(rejected, n), n),
            ];
            if n_clean > 0 {
                out.push(cell.record(
                    CLEAN_REJECTION_RATE,
                    ratio(clean_rejected, n_clean),
                    n_clean,
                ));
            }
            if n_adv > 0 {
                out.push(cell.record(
                    ADVERSARIAL_DETECTION_RATE,
                    ratio(adv_rejected, n_adv),
                    n_adv,
                ));
            }
            Ok(out)
        }
    }
}
