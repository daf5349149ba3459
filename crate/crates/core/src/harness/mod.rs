//! Experiment pipelines tying data, models, attacks, and defenses together.
//!
//! All three experiments share the same layout: records are split into
//! Training A, Training B, and Test; a gradient surrogate is trained on A,
//! classical detectors on B; adversarial records are crafted once against
//! the surrogate and replayed unchanged against every other model. The
//! experiments differ only in what answers on the receiving end: the bare
//! detectors, a majority-vote ensemble of them, or rejection-trained
//! variants of them.

mod config;
mod metrics;
mod report;

pub use config::{load_config, parse_config};
pub use metrics::{
    compute_metrics, Cell, EvalMode, MetricRecord, Truth, ACCURACY, ACCURACY_ATTACK,
    ACCURACY_NORMAL, ADVERSARIAL_DETECTION_RATE, CLEAN_REJECTION_RATE, REJECTION_RATE,
    ROBUST_ACCURACY,
};
pub use report::{
    parse_metrics_csv, read_metrics_csv, read_report, render_metrics_csv, write_report,
    ExperimentReport, CSV_HEADER, ROBUST_ACCURACY_DEFINITION,
};

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attacks::{craft_batch, AttackConfig, AttackMethod, ALL_METHODS};
use crate::classical::{train_classifier, Classifier, Hyper, ALL_KINDS};
use crate::data::{
    fit_preprocessor, load_nslkdd, split_raw, synth_fixture, transform, Dataset, LabelMode,
    Preprocessor, SplitSpec,
};
use crate::defense::{build_detect_reject, DetectRejectIds, EnsembleIds, Verdict};
use crate::error::{Error, Result};
use crate::model::{fingerprint_bytes, Model};
use crate::nn::{train_mlp, MlpConfig, MlpModel};
use crate::seeds;

pub const EXPERIMENT_TRANSFER: &str = "transfer";
pub const EXPERIMENT_ENSEMBLE: &str = "ensemble";
pub const EXPERIMENT_DETECT_REJECT: &str = "detect-reject";

/// Default perturbation sweep; the zero cell doubles as the clean baseline.
pub const DEFAULT_EPSILONS: [f64; 8] = [0.0, 0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0];

/// Where records come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DataSource {
    /// A file of NSL-KDD records (KDDTrain+ layout).
    File(PathBuf),
    /// A generated corpus of `n` records, so the full pipeline can run on
    /// machines without the dataset.
    Fixture { n: usize },
}

/// Every knob of an experiment run. `seed` is the master seed: each stage
/// (splitting, weight init, attack randomness, ...) draws from its own
/// stream derived from it, so one number pins the whole run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub split: SplitSpec,
    pub surrogate: MlpConfig,
    pub victims: Hyper,
    pub methods: Vec<AttackMethod>,
    /// Budget sweep; must start at 0.0 and ascend strictly.
    pub epsilons: Vec<f64>,
    pub pgd_iters: usize,
    /// Per-iteration step; `None` means a quarter of the budget.
    pub pgd_step: Option<f64>,
    pub random_start: bool,
    /// Budget for the crafted records the rejection models train on.
    pub dr_epsilon: f64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data: DataSource::File(PathBuf::from("data/KDDTrain+.txt")),
            split: SplitSpec::default(),
            surrogate: MlpConfig::default(),
            victims: Hyper::default(),
            methods: ALL_METHODS.to_vec(),
            epsilons: DEFAULT_EPSILONS.to_vec(),
            pgd_iters: 10,
            pgd_step: None,
            random_start: true,
            dr_epsilon: 0.3,
            seed: 42,
        }
    }
}

/// Seed streams carved out of the master seed, one per pipeline stage.
mod stream {
    pub const FIXTURE: u64 = 1;
    pub const SPLIT: u64 = 2;
    pub const SURROGATE: u64 = 3;
    pub const VICTIMS: u64 = 4;
    pub const ATTACK: u64 = 5;
    pub const DR_CRAFT: u64 = 6;
    pub const DR_FIT: u64 = 7;
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Config("at least one attack method is required".into()));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(Error::Config(format!("duplicate attack method {:?}", m.as_str())));
            }
        }
        match self.epsilons.first() {
            None => return Err(Error::Config("the epsilon sweep is empty".into())),
            Some(&e0) if e0 != 0.0 => {
                return Err(Error::Config(format!(
                    "the epsilon sweep must start at 0.0 (the clean baseline), got {e0}"
                )))
            }
            _ => {}
        }
        for pair in self.epsilons.windows(2) {
            if !(pair[1].is_finite() && pair[1] > pair[0]) {
                return Err(Error::Config(format!(
                    "epsilon sweep must ascend strictly, got {} after {}",
                    pair[1], pair[0]
                )));
            }
        }
        if let Some(step) = self.pgd_step {
            if !(step.is_finite() && step > 0.0) {
                return Err(Error::Config(format!(
                    "pgd_step must be positive and finite, got {step}"
                )));
            }
        }
        if !(self.dr_epsilon.is_finite() && self.dr_epsilon > 0.0) {
            return Err(Error::Config(format!(
                "dr_epsilon must be positive and finite, got {}",
                self.dr_epsilon
            )));
        }
        if !(self.split.test_fraction > 0.0 && self.split.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test_fraction must lie in (0,1), got {}",
                self.split.test_fraction
            )));
        }
        if let DataSource::Fixture { n } = self.data {
            if n < 10 {
                return Err(Error::Config(format!(
                    "a fixture needs at least 10 records, got {n}"
                )));
            }
        }
        self.surrogate.validate()
    }

    /// Copy with the per-stage seeds pinned from the master seed. The
    /// derivation only reads `seed`, so resolving twice is a no-op.
    pub fn resolved(&self) -> ExperimentConfig {
        let mut c = self.clone();
        c.split.seed = seeds::derive_seed(self.seed, stream::SPLIT);
        c.surrogate.seed = seeds::derive_seed(self.seed, stream::SURROGATE);
        c
    }

    /// Seed for the k-th victim's fit, from the master seed.
    pub fn victim_seed(&self, k: usize) -> u64 {
        seeds::derive_seed(seeds::derive_seed(self.seed, stream::VICTIMS), k as u64)
    }

    /// Attack configuration for sweep cell number `cell` (method-major
    /// order); experiments with equal sweeps craft identical batches.
    pub fn attack_config(&self, method: AttackMethod, epsilon: f64, cell: u64) -> AttackConfig {
        AttackConfig {
            method,
            epsilon,
            pgd_step: self.pgd_step,
            pgd_iters: self.pgd_iters,
            random_start: self.random_start,
            seed: seeds::derive_seed(seeds::derive_seed(self.seed, stream::ATTACK), cell),
        }
    }
}

/// Tag a failing stage so pipeline errors say where they happened.
fn stage<T>(name: &'static str, result: Result<T>) -> Result<T> {
    result.map_err(|e| Error::Stage {
        stage: name,
        source: Box::new(e),
    })
}

/// The three model-ready partitions plus the encoder fitted on Training A.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train_a: Dataset,
    pub train_b: Dataset,
    pub test: Dataset,
    pub preprocessor: Preprocessor,
}

/// Load (or generate) records, split them per family, fit the encoder on
/// raw Training A only, and encode all three partitions with it.
pub fn prepare(cfg: &ExperimentConfig) -> Result<PreparedData> {
    let cfg = cfg.resolved();
    cfg.validate()?;
    let raw = match &cfg.data {
        DataSource::File(path) => stage("load", load_nslkdd(path))?,
        DataSource::Fixture { n } => {
            synth_fixture(seeds::derive_seed(cfg.seed, stream::FIXTURE), *n)
        }
    };
    let parts = stage("split", split_raw(&raw, &cfg.split))?;
    let prep = stage("preprocess", fit_preprocessor(&parts.train_a))?;
    let encode = |raw| transform(&prep, raw, LabelMode::Binary);
    Ok(PreparedData {
        train_a: stage("preprocess", encode(&parts.train_a))?,
        train_b: stage("preprocess", encode(&parts.train_b))?,
        test: stage("preprocess", encode(&parts.test))?,
        preprocessor: prep,
    })
}

/// The attack surrogate and the victims, trained on their disjoint halves.
#[derive(Debug, Clone)]
pub struct TrainedStack {
    pub surrogate: MlpModel,
    /// One classifier per kind, in [`ALL_KINDS`] order.
    pub victims: Vec<Classifier>,
}

/// Train the surrogate on Training A and one victim of every kind on
/// Training B. Wall-clock seconds per stage land in `timings`.
pub fn train_stack(
    cfg: &ExperimentConfig,
    data: &PreparedData,
    timings: &mut BTreeMap<String, f64>,
) -> Result<TrainedStack> {
    let cfg = cfg.resolved();
    let t = Instant::now();
    let surrogate = stage("train_surrogate", train_mlp(&data.train_a, &cfg.surrogate))?;
    timings.insert("train_surrogate_s".into(), t.elapsed().as_secs_f64());

    let t = Instant::now();
    let victims = stage(
        "train_victims",
        ALL_KINDS
            .iter()
            .enumerate()
            .map(|(k, &kind)| {
                train_classifier(kind, &data.train_b, &cfg.victims, cfg.victim_seed(k))
            })
            .collect::<Result<Vec<_>>>(),
    )?;
    timings.insert("train_victims_s".into(), t.elapsed().as_secs_f64());
    Ok(TrainedStack { surrogate, victims })
}

/// Fingerprint of a matrix's exact bit pattern, for replay checks.
pub fn matrix_fingerprint(m: &Array2<f64>) -> String {
    let mut bytes = Vec::with_capacity(16 + m.len() * 8);
    bytes.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    bytes.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for v in m.iter() {
        bytes.extend_from_slice(&v.to_bits().to_le_bytes());
    }
    fingerprint_bytes(&bytes)
}

/// Classify every row of `rows` with an abstention-free model.
fn classify_rows(model: &dyn Model, rows: &Array2<f64>) -> Result<Vec<Verdict>> {
    (0..rows.nrows())
        .into_par_iter()
        .map(|i| model.predict(rows.row(i)).map(Verdict::Class))
        .collect()
}

fn reject_or_classify_rows(model: &DetectRejectIds, rows: &Array2<f64>) -> Result<Vec<Verdict>> {
    (0..rows.nrows())
        .into_par_iter()
        .map(|i| model.predict(rows.row(i)))
        .collect()
}

/// Ground truth for one sweep cell: the zero-budget batch is the clean
/// baseline, every other batch is adversarial.
fn truths(labels: &[usize], epsilon: f64) -> Vec<Truth> {
    labels
        .iter()
        .map(|&y| {
            if epsilon == 0.0 {
                Truth::Clean(y)
            } else {
                Truth::Adversarial(y)
            }
        })
        .collect()
}

/// Measure black-box transferability: craft against the surrogate, replay
/// against it and every victim, score plain accuracy per sweep cell.
pub fn run_transfer_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_attack_experiment(cfg, EXPERIMENT_TRANSFER, false)
}

/// The transferability sweep with a majority-vote ensemble of the victims
/// answering alongside them.
pub fn run_ensemble_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_attack_experiment(cfg, EXPERIMENT_ENSEMBLE, true)
}

fn run_attack_experiment(
    cfg: &ExperimentConfig,
    experiment: &'static str,
    with_ensemble: bool,
) -> Result<ExperimentReport> {
    let cfg = cfg.resolved();
    cfg.validate()?;
    let total = Instant::now();
    let mut timings = BTreeMap::new();

    let t = Instant::now();
    let data = prepare(&cfg)?;
    timings.insert("prepare_s".into(), t.elapsed().as_secs_f64());

    let stack = train_stack(&cfg, &data, &mut timings)?;
    let ensemble = match with_ensemble {
        true => Some(stage("build_ensemble", EnsembleIds::new(stack.victims.clone()))?),
        false => None,
    };

    let mut model_fingerprints = BTreeMap::new();
    model_fingerprints.insert(stack.surrogate.name().to_owned(), stack.surrogate.fingerprint());
    for v in &stack.victims {
        model_fingerprints.insert(v.name().to_owned(), v.fingerprint());
    }
    if let Some(e) = &ensemble {
        model_fingerprints.insert(e.name().to_owned(), e.fingerprint());
    }

    let t = Instant::now();
    let mut records = Vec::new();
    let mut batch_fingerprints = BTreeMap::new();
    for (mi, &method) in cfg.methods.iter().enumerate() {
        for (ei, &epsilon) in cfg.epsilons.iter().enumerate() {
            let cell = (mi * cfg.epsilons.len() + ei) as u64;
            let acfg = cfg.attack_config(method, epsilon, cell);
            let batch = stage("craft", craft_batch(&stack.surrogate, &data.test, &acfg))?;
            batch_fingerprints.insert(
                format!("{}@{}", method.as_str(), epsilon),
                matrix_fingerprint(&batch.adversarials),
            );
            let truth = truths(&batch.true_labels, epsilon);

            let mut targets: Vec<&dyn Model> = vec![&stack.surrogate];
            targets.extend(stack.victims.iter().map(|v| v as &dyn Model));
            if let Some(e) = &ensemble {
                targets.push(e);
            }
            for model in targets {
                let preds = stage("evaluate", classify_rows(model, &batch.adversarials))?;
                let cell = Cell {
                    experiment: experiment.to_owned(),
                    method: method.as_str().to_owned(),
                    epsilon,
                    model: model.name().to_owned(),
                };
                records.extend(compute_metrics(&cell, &preds, &truth, EvalMode::Accuracy)?);
            }
        }
    }
    timings.insert("craft_and_evaluate_s".into(), t.elapsed().as_secs_f64());
    timings.insert("total_s".into(), total.elapsed().as_secs_f64());

    Ok(ExperimentReport {
        experiment: experiment.to_owned(),
        config: cfg,
        robust_accuracy_definition: ROBUST_ACCURACY_DEFINITION.to_owned(),
        model_fingerprints,
        batch_fingerprints,
        records,
        timings,
    })
}

/// Compare every detector kind against its rejection-trained variant.
///
/// Crafted records at `dr_epsilon` (projected gradient, from Training B)
/// form the third training class. The sweep then scores each bare detector
/// and its retrained variant (`<kind>+dr`) in rejection-aware mode.
pub fn run_detect_reject_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let cfg = cfg.resolved();
    cfg.validate()?;
    let total = Instant::now();
    let mut timings = BTreeMap::new();

    let t = Instant::now();
    let data = prepare(&cfg)?;
    timings.insert("prepare_s".into(), t.elapsed().as_secs_f64());

    let stack = train_stack(&cfg, &data, &mut timings)?;

    let t = Instant::now();
    let dr_attack = AttackConfig {
        method: AttackMethod::Pgd,
        epsilon: cfg.dr_epsilon,
        pgd_step: cfg.pgd_step,
        pgd_iters: cfg.pgd_iters,
        random_start: cfg.random_start,
        seed: seeds::derive_seed(cfg.seed, stream::DR_CRAFT),
    };
    let dr_batch = stage(
        "craft_defense",
        craft_batch(&stack.surrogate, &data.train_b, &dr_attack),
    )?;
    let mut batch_fingerprints = BTreeMap::new();
    batch_fingerprints.insert(
        format!("dr-train@{}", cfg.dr_epsilon),
        matrix_fingerprint(&dr_batch.adversarials),
    );

    let fit_base = seeds::derive_seed(cfg.seed, stream::DR_FIT);
    let defended = stage(
        "train_defended",
        ALL_KINDS
            .iter()
            .enumerate()
            .map(|(k, &kind)| {
                build_detect_reject(
                    kind,
                    &data.train_b,
                    &dr_batch,
                    &cfg.victims,
                    seeds::derive_seed(fit_base, k as u64),
                )
            })
            .collect::<Result<Vec<_>>>(),
    )?;
    timings.insert("train_defended_s".into(), t.elapsed().as_secs_f64());

    let mut model_fingerprints = BTreeMap::new();
    model_fingerprints.insert(stack.surrogate.name().to_owned(), stack.surrogate.fingerprint());
    for (v, d) in stack.victims.iter().zip(&defended) {
        model_fingerprints.insert(v.name().to_owned(), v.fingerprint());
        model_fingerprints.insert(
            format!("{}+dr", d.kind().as_str()),
            d.classifier().fingerprint(),
        );
    }

    let t = Instant::now();
    let mut records = Vec::new();
    for (mi, &method) in cfg.methods.iter().enumerate() {
        for (ei, &epsilon) in cfg.epsilons.iter().enumerate() {
            let cell = (mi * cfg.epsilons.len() + ei) as u64;
            let acfg = cfg.attack_config(method, epsilon, cell);
            let batch = stage("craft", craft_batch(&stack.surrogate, &data.test, &acfg))?;
            batch_fingerprints.insert(
                format!("{}@{}", method.as_str(), epsilon),
                matrix_fingerprint(&batch.adversarials),
            );
            let truth = truths(&batch.true_labels, epsilon);

            for (victim, dr) in stack.victims.iter().zip(&defended) {
                let mut score = |model: &str, preds: Vec<Verdict>| -> Result<()> {
                    let cell = Cell {
                        experiment: EXPERIMENT_DETECT_REJECT.to_owned(),
                        method: method.as_str().to_owned(),
                        epsilon,
                        model: model.to_owned(),
                    };
                    records.extend(compute_metrics(&cell, &preds, &truth, EvalMode::Robust)?);
                    Ok(())
                };
                score(
                    victim.name(),
                    stage("evaluate", classify_rows(victim, &batch.adversarials))?,
                )?;
                score(
                    &format!("{}+dr", dr.kind().as_str()),
                    stage(
                        "evaluate",
                        reject_or_classify_rows(dr, &batch.adversarials),
                    )?,
                )?;
            }
        }
    }
    timings.insert("craft_and_evaluate_s".into(), t.elapsed().as_secs_f64());
    timings.insert("total_s".into(), total.elapsed().as_secs_f64());

    Ok(ExperimentReport {
        experiment: EXPERIMENT_DETECT_REJECT.to_owned(),
        config: cfg,
        robust_accuracy_definition: ROBUST_ACCURACY_DEFINITION.to_owned(),
        model_fingerprints,
        batch_fingerprints,
        records,
        timings,
    })
}
