//! The two defenses: a majority-vote ensemble over the five classical
//! detectors, and Detect & Reject, which retrains a detector with a third
//! "adversarial" class and rejects anything assigned to it.

use std::path::Path;
use std::sync::Arc;

use ndarray::{s, Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::attacks::AdversarialBatch;
use crate::classical::{
    load_classifier, save_classifier, train_classifier, Classifier, ClassifierKind, Hyper,
};
use crate::container;
use crate::data::{Dataset, Schema};
use crate::error::{Error, Result};
use crate::model::{check_dim, fingerprint_bytes, Model};

/// Outcome of a detector that may refuse to classify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Class(usize),
    Rejected,
}

/// Majority label among binary votes; an even tie breaks to class 0, but
/// the five-member ensemble always votes an odd count.
pub fn majority_vote(votes: &[usize]) -> usize {
    let ones = votes.iter().filter(|&&v| v == 1).count();
    usize::from(2 * ones > votes.len())
}

/// Five binary detectors reduced by majority vote. Built from the victims
/// of a transfer run, one per classifier kind; degenerate member sets are
/// allowed for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleIds {
    members: Vec<Classifier>,
}

pub const ENSEMBLE_SIZE: usize = 5;

impl EnsembleIds {
    /// Requires exactly five binary members fitted on one schema.
    pub fn new(members: Vec<Classifier>) -> Result<EnsembleIds> {
        if members.len() != ENSEMBLE_SIZE {
            return Err(Error::Config(format!(
                "an ensemble takes exactly {ENSEMBLE_SIZE} members, got {}",
                members.len()
            )));
        }
        for m in &members {
            if m.n_classes() != 2 {
                return Err(Error::Config(format!(
                    "ensemble members must be binary; {} has {} classes",
                    m.name(),
                    m.n_classes()
                )));
            }
        }
        let fp = members[0].schema_fingerprint();
        if members.iter().any(|m| m.schema_fingerprint() != fp) {
            return Err(Error::Config(
                "ensemble members were fitted on different schemas".into(),
            ));
        }
        Ok(EnsembleIds { members })
    }

    pub fn members(&self) -> &[Classifier] {
        &self.members
    }

    fn votes(&self, x: ArrayView1<f64>) -> Result<Vec<usize>> {
        self.members.iter().map(|m| m.predict(x)).collect()
    }
}

impl Model for EnsembleIds {
    fn name(&self) -> &str {
        "ensemble"
    }

    fn n_classes(&self) -> usize {
        2
    }

    fn input_dim(&self) -> usize {
        self.members[0].input_dim()
    }

    fn schema_fingerprint(&self) -> &str {
        self.members[0].schema_fingerprint()
    }

    /// Vote shares, so the argmax always agrees with the majority label.
    fn predict_proba(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        let votes = self.votes(x)?;
        let share = votes.iter().filter(|&&v| v == 1).count() as f64 / votes.len() as f64;
        Ok(Array1::from(vec![1.0 - share, share]))
    }

    fn predict(&self, x: ArrayView1<f64>) -> Result<usize> {
        check_dim(self.input_dim(), x.len())?;
        Ok(majority_vote(&self.votes(x)?))
    }

    fn fingerprint(&self) -> String {
        let mut bytes = Vec::new();
        for m in &self.members {
            bytes.extend_from_slice(m.name().as_bytes());
            bytes.extend_from_slice(m.fingerprint().as_bytes());
        }
        fingerprint_bytes(&bytes)
    }
}

const ENSEMBLE_KIND: &str = "ensemble";
const ENSEMBLE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct EnsembleHeader {
    schema_fingerprint: String,
    n_members: usize,
}

/// Write the ensemble into `dir`: one container per member plus a manifest
/// (`ensemble.txt`) referencing each member file by kind and fingerprint.
pub fn save_ensemble(dir: &Path, ens: &EnsembleIds) -> Result<()> {
    let header = EnsembleHeader {
        schema_fingerprint: ens.schema_fingerprint().to_string(),
        n_members: ens.members.len(),
    };
    let mut payload = Vec::with_capacity(ens.members.len());
    for (i, m) in ens.members.iter().enumerate() {
        let file = format!("member_{i}_{}.txt", m.name());
        save_classifier(&dir.join(&file), m)?;
        payload.push(format!("{},{},{}", m.name(), m.fingerprint(), file));
    }
    container::write_file(
        &dir.join("ensemble.txt"),
        ENSEMBLE_KIND,
        ENSEMBLE_VERSION,
        &header,
        &payload,
    )
}

/// Load a manifest written by [`save_ensemble`], verifying that every
/// member file still matches its recorded kind and fingerprint.
pub fn load_ensemble(dir: &Path) -> Result<EnsembleIds> {
    let c = container::read_file(&dir.join("ensemble.txt"), ENSEMBLE_KIND, ENSEMBLE_VERSION)?;
    let header: EnsembleHeader = c.header_as()?;
    if c.payload.len() != header.n_members {
        return Err(Error::Container(format!(
            "manifest declares {} members but lists {}",
            header.n_members,
            c.payload.len()
        )));
    }
    let mut members = Vec::with_capacity(c.payload.len());
    for (i, line) in c.payload.iter().enumerate() {
        let mut fields = line.split(',');
        let (kind, fp, file) = match (fields.next(), fields.next(), fields.next()) {
            (Some(k), Some(f), Some(p)) if fields.next().is_none() => (k, f, p),
            _ => {
                return Err(Error::Container(format!(
                    "manifest line {i} is not kind,fingerprint,file"
                )))
            }
        };
        let m = load_classifier(&dir.join(file))?;
        if m.name() != kind || m.fingerprint() != fp {
            return Err(Error::Container(format!(
                "member file {file} does not match the manifest entry ({kind}, {fp})"
            )));
        }
        members.push(m);
    }
    let ens = EnsembleIds::new(members)?;
    if ens.schema_fingerprint() != header.schema_fingerprint {
        return Err(Error::Container(
            "manifest schema fingerprint does not match the members".into(),
        ));
    }
    Ok(ens)
}

/// A detector retrained over three classes; anything it labels with the
/// third ("adversarial") class is rejected instead of classified.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectRejectIds {
    model: Classifier,
}

/// Class id reserved for crafted traffic in the retrained detector.
pub const ADVERSARIAL_CLASS: usize = 2;

impl DetectRejectIds {
    /// Wrap an already-fitted three-class detector.
    pub fn from_classifier(model: Classifier) -> Result<DetectRejectIds> {
        if model.n_classes() != 3 {
            return Err(Error::Config(format!(
                "Detect & Reject needs a 3-class model, got {} classes",
                model.n_classes()
            )));
        }
        Ok(DetectRejectIds { model })
    }

    pub fn kind(&self) -> ClassifierKind {
        self.model.kind()
    }

    pub fn classifier(&self) -> &Classifier {
        &self.model
    }

    /// Classify, rejecting anything labeled adversarial.
    pub fn predict(&self, x: ArrayView1<f64>) -> Result<Verdict> {
        match self.model.predict(x)? {
            ADVERSARIAL_CLASS => Ok(Verdict::Rejected),
            c => Ok(Verdict::Class(c)),
        }
    }
}

/// Retrain `kind` with a third class: the binary training rows keep their
/// labels, and every crafted row from `adv` joins as class 2. `adv` must
/// have been crafted from exactly the rows of `train`.
pub fn build_detect_reject(
    kind: ClassifierKind,
    train: &Dataset,
    adv: &AdversarialBatch,
    hyper: &Hyper,
    seed: u64,
) -> Result<DetectRejectIds> {
    if adv.n_samples() == 0 {
        return Err(Error::Data(
            "Detect & Reject needs adversarial examples; the batch is empty".into(),
        ));
    }
    if train.schema.class_names.len() != 2 {
        return Err(Error::Data(format!(
            "Detect & Reject retrains a binary detector, got {} classes",
            train.schema.class_names.len()
        )));
    }
    let train_fp = train.schema_fingerprint();
    if adv.schema_fingerprint != train_fp {
        return Err(Error::SchemaMismatch {
            model: adv.schema_fingerprint.clone(),
            data: train_fp,
        });
    }
    if adv.originals != train.matrix {
        return Err(Error::Data(
            "adversarial batch was not crafted from the given training rows".into(),
        ));
    }

    let n = train.n_samples();
    let d = train.n_dims();
    let mut matrix = Array2::zeros((2 * n, d));
    matrix.slice_mut(s![..n, ..]).assign(&train.matrix);
    matrix.slice_mut(s![n.., ..]).assign(&adv.adversarials);
    let mut labels = train.labels.clone();
    labels.extend(std::iter::repeat(ADVERSARIAL_CLASS).take(n));
    let mut families = train.families.clone();
    families.extend_from_slice(&train.families);
    let mut class_names = train.schema.class_names.clone();
    class_names.push("adversarial".into());
    let union = Dataset {
        matrix,
        labels,
        families,
        schema: Arc::new(Schema {
            dims: train.schema.dims.clone(),
            class_names,
        }),
    };
    DetectRejectIds::from_classifier(train_classifier(kind, &union, hyper, seed)?)
}
