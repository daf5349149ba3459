//! The five black-box victim detectors, all trained from scratch: linear
//! SVM, decision tree, logistic regression, random forest, and LDA.
//!
//! Every kind supports two or three classes. SVM and logistic regression
//! reduce multi-class to one-vs-rest; the others are natively multi-class.

mod forest;
mod lda;
mod linear;
mod tree;

pub use forest::ForestHyper;
pub use lda::{fit_lda, LdaHyper, LdaParams};
pub use linear::{LogRegHyper, SvmHyper};
pub use tree::{TreeHyper, TreeNode};

use std::path::Path;

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::container;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{argmax_tie_lowest, check_dim, fingerprint_bytes, Model};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassifierKind {
    Svm,
    DecisionTree,
    LogisticRegression,
    RandomForest,
    Lda,
}

pub const ALL_KINDS: [ClassifierKind; 5] = [
    ClassifierKind::Svm,
    ClassifierKind::DecisionTree,
    ClassifierKind::LogisticRegression,
    ClassifierKind::RandomForest,
    ClassifierKind::Lda,
];

impl ClassifierKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ClassifierKind::Svm => "svm",
            ClassifierKind::DecisionTree => "dt",
            ClassifierKind::LogisticRegression => "lr",
            ClassifierKind::RandomForest => "rf",
            ClassifierKind::Lda => "lda",
        }
    }

    pub fn from_str(s: &str) -> Result<ClassifierKind> {
        ALL_KINDS
            .iter()
            .find(|k| k.as_str() == s)
            .copied()
            .ok_or_else(|| Error::Config(format!("unknown classifier kind {s:?}")))
    }
}

/// Hyperparameters for every kind; the unused ones are ignored per fit.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Hyper {
    pub logreg: LogRegHyper,
    pub svm: SvmHyper,
    pub tree: TreeHyper,
    pub forest: ForestHyper,
    pub lda: LdaHyper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedLinear {
    pub units: Vec<linear::LinearUnit>,
    n_classes: usize,
    input_dim: usize,
    schema_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedTree {
    pub root: TreeNode,
    n_classes: usize,
    input_dim: usize,
    schema_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedForest {
    pub trees: Vec<TreeNode>,
    n_classes: usize,
    input_dim: usize,
    schema_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedLda {
    pub params: lda::LdaParams,
    n_classes: usize,
    input_dim: usize,
    schema_fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Classifier {
    Svm(FittedLinear),
    DecisionTree(FittedTree),
    LogisticRegression(FittedLinear),
    RandomForest(FittedForest),
    Lda(FittedLda),
}

impl Classifier {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            Classifier::Svm(_) => ClassifierKind::Svm,
            Classifier::DecisionTree(_) => ClassifierKind::DecisionTree,
            Classifier::LogisticRegression(_) => ClassifierKind::LogisticRegression,
            Classifier::RandomForest(_) => ClassifierKind::RandomForest,
            Classifier::Lda(_) => ClassifierKind::Lda,
        }
    }
}

/// Fit one victim. `seed` only matters for the random forest; the other
/// kinds are deterministic functions of the data.
pub fn train_classifier(
    kind: ClassifierKind,
    data: &Dataset,
    hyper: &Hyper,
    seed: u64,
) -> Result<Classifier> {
    if data.n_samples() == 0 {
        return Err(Error::Data("training set is empty".into()));
    }
    if let Some(((r, c), v)) = data
        .matrix
        .indexed_iter()
        .find(|(_, v)| !v.is_finite())
    {
        return Err(Error::Data(format!(
            "non-finite feature value {v} at row {r}, column {c}"
        )));
    }
    let n_classes = data.schema.class_names.len();
    if let Some(&bad) = data.labels.iter().find(|&&y| y >= n_classes) {
        return Err(Error::Data(format!(
            "label {bad} out of range for {n_classes} classes"
        )));
    }
    let mut seen = vec![false; n_classes];
    for &y in &data.labels {
        seen[y] = true;
    }
    if seen.iter().filter(|&&s| s).count() < 2 {
        return Err(Error::Data(
            "training data holds a single class; need at least two".into(),
        ));
    }

    let input_dim = data.n_dims();
    let schema_fingerprint = data.schema_fingerprint();
    let x = data.matrix.view();
    Ok(match kind {
        ClassifierKind::Svm => Classifier::Svm(FittedLinear {
            units: linear::fit_svm(data, n_classes, &hyper.svm),
            n_classes,
            input_dim,
            schema_fingerprint,
        }),
        ClassifierKind::LogisticRegression => Classifier::LogisticRegression(FittedLinear {
            units: linear::fit_logreg(data, n_classes, &hyper.logreg),
            n_classes,
            input_dim,
            schema_fingerprint,
        }),
        ClassifierKind::DecisionTree => {
            let idx: Vec<usize> = (0..data.n_samples()).collect();
            let root = tree::grow(
                x,
                &data.labels,
                &idx,
                n_classes,
                &hyper.tree,
                &mut |d| (0..d).collect(),
                0,
            );
            Classifier::DecisionTree(FittedTree {
                root,
                n_classes,
                input_dim,
                schema_fingerprint,
            })
        }
        ClassifierKind::RandomForest => Classifier::RandomForest(FittedForest {
            trees: forest::fit_forest(x, &data.labels, n_classes, &hyper.forest, seed),
            n_classes,
            input_dim,
            schema_fingerprint,
        }),
        ClassifierKind::Lda => Classifier::Lda(FittedLda {
            params: lda::fit_lda(x, &data.labels, n_classes, &hyper.lda)?,
            n_classes,
            input_dim,
            schema_fingerprint,
        }),
    })
}

impl Model for Classifier {
    fn name(&self) -> &str {
        self.kind().as_str()
    }

    fn n_classes(&self) -> usize {
        match self {
            Classifier::Svm(m) | Classifier::LogisticRegression(m) => m.n_classes,
            Classifier::DecisionTree(m) => m.n_classes,
            Classifier::RandomForest(m) => m.n_classes,
            Classifier::Lda(m) => m.n_classes,
        }
    }

    fn input_dim(&self) -> usize {
        match self {
            Classifier::Svm(m) | Classifier::LogisticRegression(m) => m.input_dim,
            Classifier::DecisionTree(m) => m.input_dim,
            Classifier::RandomForest(m) => m.input_dim,
            Classifier::Lda(m) => m.input_dim,
        }
    }

    fn schema_fingerprint(&self) -> &str {
        match self {
            Classifier::Svm(m) | Classifier::LogisticRegression(m) => &m.schema_fingerprint,
            Classifier::DecisionTree(m) => &m.schema_fingerprint,
            Classifier::RandomForest(m) => &m.schema_fingerprint,
            Classifier::Lda(m) => &m.schema_fingerprint,
        }
    }

    fn predict_proba(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_dim(self.input_dim(), x.len())?;
        Ok(match self {
            Classifier::Svm(m) => linear::svm_proba(&m.units, x),
            Classifier::LogisticRegression(m) => linear::logreg_proba(&m.units, x),
            Classifier::DecisionTree(m) => {
                Array1::from_vec(m.root.class_frequencies(x.as_slice().expect("contiguous")))
            }
            Classifier::RandomForest(m) => Array1::from_vec(forest::forest_proba(
                &m.trees,
                x.as_slice().expect("contiguous"),
                m.n_classes,
            )),
            Classifier::Lda(m) => crate::nn::softmax(&m.params.discriminants(x)),
        })
    }

    fn predict(&self, x: ArrayView1<f64>) -> Result<usize> {
        check_dim(self.input_dim(), x.len())?;
        Ok(match self {
            Classifier::Svm(m) | Classifier::LogisticRegression(m) => {
                let s = linear::scores(&m.units, x);
                argmax_tie_lowest(s.as_slice().expect("contiguous"))
            }
            Classifier::DecisionTree(m) => {
                m.root.predict_class(x.as_slice().expect("contiguous"))
            }
            Classifier::RandomForest(m) => {
                forest::forest_vote(&m.trees, x.as_slice().expect("contiguous"), m.n_classes)
            }
            Classifier::Lda(m) => {
                let d = m.params.discriminants(x);
                argmax_tie_lowest(d.as_slice().expect("contiguous"))
            }
        })
    }

    fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("classifier serializes");
        fingerprint_bytes(json.as_bytes())
    }
}

const KIND: &str = "model";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    model: String,
    schema_fingerprint: String,
    n_classes: usize,
}

pub fn save_classifier(path: &Path, clf: &Classifier) -> Result<()> {
    let header = Header {
        model: clf.name().to_string(),
        schema_fingerprint: clf.schema_fingerprint().to_string(),
        n_classes: clf.n_classes(),
    };
    let payload = vec![serde_json::to_string(clf)
        .map_err(|e| Error::Container(format!("classifier serialization failed: {e}")))?];
    container::write_file(path, KIND, VERSION, &header, &payload)
}

pub fn load_classifier(path: &Path) -> Result<Classifier> {
    let c = container::read_file(path, KIND, VERSION)?;
    let header: Header = c.header_as()?;
    ClassifierKind::from_str(&header.model).map_err(|_| {
        Error::Container(format!(
            "file holds a {:?} model, expected one of the classical kinds",
            header.model
        ))
    })?;
    let line = c
        .payload
        .first()
        .ok_or_else(|| Error::Container("missing classifier payload".into()))?;
    let clf: Classifier = serde_json::from_str(line)
        .map_err(|e| Error::Container(format!("classifier payload parse failed: {e}")))?;
    if clf.name() != header.model {
        return Err(Error::Container(format!(
            "header says {:?} but payload holds {:?}",
            header.model,
            clf.name()
        )));
    }
    Ok(clf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{blobs, make_dataset};
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    fn accuracy(model: &dyn Model, data: &Dataset) -> f64 {
        let correct = data
            .matrix
            .outer_iter()
            .zip(&data.labels)
            .filter(|(x, &y)| model.predict(x.view()).unwrap() == y)
            .count();
        correct as f64 / data.n_samples() as f64
    }

    fn two_blobs() -> Dataset {
        blobs(17, 100, &[[0.25, 0.25], [0.75, 0.75]], 0.06)
    }

    #[test]
    fn every_kind_fits_separable_blobs() {
        let data = two_blobs();
        for kind in ALL_KINDS {
            let clf = train_classifier(kind, &data, &Hyper::default(), 5).unwrap();
            let acc = accuracy(&clf, &data);
            assert!(acc >= 0.95, "{}: {acc}", kind.as_str());
        }
    }

    #[test]
    fn every_kind_supports_three_classes() {
        let data = blobs(29, 60, &[[0.2, 0.2], [0.8, 0.2], [0.5, 0.85]], 0.05);
        for kind in ALL_KINDS {
            let clf = train_classifier(kind, &data, &Hyper::default(), 5).unwrap();
            assert_eq!(clf.n_classes(), 3);
            let acc = accuracy(&clf, &data);
            assert!(acc >= 0.9, "{}: {acc}", kind.as_str());
            let p = clf.predict_proba(data.matrix.row(0)).unwrap();
            assert_eq!(p.len(), 3);
            assert!((p.sum() - 1.0).abs() < 1e-6);
            assert!(p.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn probabilities_sum_to_one_for_every_kind() {
        let data = two_blobs();
        let probe = array![0.5, 0.5];
        for kind in ALL_KINDS {
            let clf = train_classifier(kind, &data, &Hyper::default(), 5).unwrap();
            let p = clf.predict_proba(probe.view()).unwrap();
            assert!((p.sum() - 1.0).abs() < 1e-6, "{}", kind.as_str());
        }
    }

    #[test]
    fn single_class_data_is_rejected_by_every_kind() {
        let data = blobs(3, 30, &[[0.5, 0.5]], 0.05);
        for kind in ALL_KINDS {
            assert!(train_classifier(kind, &data, &Hyper::default(), 5).is_err());
        }
    }

    #[test]
    fn non_finite_features_are_rejected() {
        let mut matrix = Array2::zeros((4, 2));
        matrix[(2, 1)] = f64::NAN;
        let data = make_dataset(matrix, vec![0, 1, 0, 1], 2);
        for kind in ALL_KINDS {
            assert!(train_classifier(kind, &data, &Hyper::default(), 5).is_err());
        }
    }

    #[test]
    fn out_of_range_label_is_rejected() {
        let data = make_dataset(Array2::zeros((3, 2)), vec![0, 1, 2], 2);
        assert!(train_classifier(ClassifierKind::Svm, &data, &Hyper::default(), 5).is_err());
    }

    #[test]
    fn forest_is_deterministic_given_seed() {
        let data = two_blobs();
        let hyper = Hyper {
            forest: ForestHyper {
                n_trees: 12,
                ..ForestHyper::default()
            },
            ..Hyper::default()
        };
        let a = train_classifier(ClassifierKind::RandomForest, &data, &hyper, 5).unwrap();
        let b = train_classifier(ClassifierKind::RandomForest, &data, &hyper, 5).unwrap();
        let c = train_classifier(ClassifierKind::RandomForest, &data, &hyper, 6).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn svm_reaches_the_margin_on_separable_data() {
        // Tight, well-separated blobs: the hinge term dominates the regularizer,
        // so the optimum places every point at or beyond the unit margin.
        let data = blobs(41, 80, &[[0.1, 0.1], [0.9, 0.9]], 0.01);
        let hyper = Hyper {
            svm: SvmHyper {
                epochs: 20_000,
                ..SvmHyper::default()
            },
            ..Hyper::default()
        };
        let clf = train_classifier(ClassifierKind::Svm, &data, &hyper, 5).unwrap();
        let Classifier::Svm(m) = &clf else {
            panic!()
        };
        for (k, unit) in m.units.iter().enumerate() {
            let min = linear::min_margin(unit, data.matrix.view(), &data.labels, k);
            assert!(min >= 1.0 - 1e-2, "unit {k}: min margin {min}");
        }
    }

    #[test]
    fn zero_weight_linear_models_predict_class_zero() {
        let units = vec![
            linear::LinearUnit {
                w: Array1::zeros(2),
                b: 0.0,
            },
            linear::LinearUnit {
                w: Array1::zeros(2),
                b: 0.0,
            },
        ];
        let clf = Classifier::LogisticRegression(FittedLinear {
            units,
            n_classes: 2,
            input_dim: 2,
            schema_fingerprint: "s".into(),
        });
        let x = array![0.3, 0.9];
        assert_eq!(clf.predict(x.view()).unwrap(), 0);
        let p = clf.predict_proba(x.view()).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let data = two_blobs();
        let clf = train_classifier(ClassifierKind::Lda, &data, &Hyper::default(), 5).unwrap();
        assert!(clf.predict(array![0.5].view()).is_err());
        assert!(clf.predict_proba(array![0.5, 0.5, 0.5].view()).is_err());
    }

    #[test]
    fn every_kind_round_trips_through_disk() {
        let data = two_blobs();
        let dir = tempfile::tempdir().unwrap();
        let hyper = Hyper {
            forest: ForestHyper {
                n_trees: 5,
                ..ForestHyper::default()
            },
            ..Hyper::default()
        };
        let probe = array![0.4, 0.6];
        for kind in ALL_KINDS {
            let clf = train_classifier(kind, &data, &hyper, 5).unwrap();
            let path = dir.path().join(format!("{}.txt", kind.as_str()));
            save_classifier(&path, &clf).unwrap();
            let back = load_classifier(&path).unwrap();
            assert_eq!(back, clf, "{}", kind.as_str());
            assert_eq!(back.fingerprint(), clf.fingerprint());
            assert_eq!(
                back.predict(probe.view()).unwrap(),
                clf.predict(probe.view()).unwrap()
            );
        }
    }

    #[test]
    fn dnn_files_are_not_classical_models() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        let mlp = crate::nn::MlpModel::new_random(2, &[], 2, 1, "s".into()).unwrap();
        crate::nn::save_mlp(&path, &mlp).unwrap();
        assert!(load_classifier(&path).is_err());
    }

    /// Brute-force leaf lookup: enumerate every root-to-leaf path and pick
    /// the single region containing `x`.
    fn oracle_predict(root: &TreeNode, x: &[f64]) -> usize {
        type Constraint = (usize, f64, bool);
        fn walk<'a>(
            node: &'a TreeNode,
            cons: &mut Vec<Constraint>,
            out: &mut Vec<(Vec<Constraint>, &'a TreeNode)>,
        ) {
            match node {
                TreeNode::Leaf { .. } => out.push((cons.clone(), node)),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    cons.push((*feature, *threshold, true));
                    walk(left, cons, out);
                    cons.pop();
                    cons.push((*feature, *threshold, false));
                    walk(right, cons, out);
                    cons.pop();
                }
            }
        }
        let mut paths = Vec::new();
        walk(root, &mut Vec::new(), &mut paths);
        let matching: Vec<_> = paths
            .iter()
            .filter(|(cons, _)| {
                cons.iter()
                    .all(|&(f, t, le)| if le { x[f] <= t } else { x[f] > t })
            })
            .collect();
        assert_eq!(matching.len(), 1, "regions must tile the space");
        match matching[0].1 {
            TreeNode::Leaf { histogram } => {
                let h: Vec<f64> = histogram.iter().map(|&c| c as f64).collect();
                argmax_tie_lowest(&h)
            }
            _ => unreachable!(),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

        #[test]
        fn tree_prediction_matches_path_walk_oracle(
            seed in any::<u64>(),
            n in 5usize..40,
            d in 1usize..4,
            n_classes in 2usize..4,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let matrix = Array2::from_shape_fn((n, d), |_| {
                // coarse grid makes duplicate values (and split ties) common
                (rng.gen_range(0..8) as f64) / 8.0
            });
            let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n_classes)).collect();
            prop_assume!({
                let mut seen = vec![false; n_classes];
                for &y in &labels { seen[y] = true; }
                seen.iter().filter(|&&s| s).count() >= 2
            });
            let data = make_dataset(matrix, labels, n_classes);
            let clf = train_classifier(
                ClassifierKind::DecisionTree, &data, &Hyper::default(), 0,
            ).unwrap();
            let Classifier::DecisionTree(m) = &clf else { unreachable!() };
            for _ in 0..20 {
                let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.2..1.2)).collect();
                prop_assert_eq!(m.root.predict_class(&x), oracle_predict(&m.root, &x));
            }
        }
    }
}
