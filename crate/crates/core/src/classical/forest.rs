//! Random forest: bootstrap samples, sqrt(d) random feature candidates per
//! split, hard majority vote.
//!
//! Every tree owns a generator seeded from the master seed and its index, so
//! parallel induction is reproducible regardless of thread scheduling.

use ndarray::ArrayView2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, TreeHyper, TreeNode};
use crate::seeds::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestHyper {
    pub n_trees: usize,
    pub tree: TreeHyper,
}

impl Default for ForestHyper {
    fn default() -> Self {
        ForestHyper {
            n_trees: 100,
            tree: TreeHyper::default(),
        }
    }
}

pub fn fit_forest(
    x: ArrayView2<f64>,
    labels: &[usize],
    n_classes: usize,
    hyper: &ForestHyper,
    seed: u64,
) -> Vec<TreeNode> {
    let n = labels.len();
    let d = x.ncols();
    let n_features = (d as f64).sqrt().floor().max(1.0) as usize;
    (0..hyper.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64));
            let bootstrap: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            grow(
                x,
                labels,
                &bootstrap,
                n_classes,
                &hyper.tree,
                &mut |dim| rand::seq::index::sample(&mut rng, dim, n_features.min(dim)).into_vec(),
                0,
            )
        })
        .collect()
}

/// Majority over per-tree class votes; ties go to the lowest class id.
pub fn forest_vote(trees: &[TreeNode], x: &[f64], n_classes: usize) -> usize {
    let mut votes = vec![0.0f64; n_classes];
    for tree in trees {
        votes[tree.predict_class(x)] += 1.0;
    }
    crate::model::argmax_tie_lowest(&votes)
}

/// Mean of per-tree leaf frequencies.
pub fn forest_proba(trees: &[TreeNode], x: &[f64], n_classes: usize) -> Vec<f64> {
    let mut mean = vec![0.0f64; n_classes];
    for tree in trees {
        for (m, p) in mean.iter_mut().zip(tree.class_frequencies(x)) {
            *m += p;
        }
    }
    for m in &mut mean {
        *m /= trees.len() as f64;
    }
    mean
}
