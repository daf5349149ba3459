//! CART-style decision tree: Gini impurity, midpoint thresholds, no pruning.
//!
//! Ties between candidate splits resolve to the lowest feature index, then
//! the lowest threshold, so a refit reproduces the same tree. A zero-gain
//! split is still taken when the node is impure; both children are always
//! non-empty, which bounds the recursion.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::model::argmax_tie_lowest;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        /// Training sample count per class; never all zero.
        histogram: Vec<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeHyper {
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
}

impl Default for TreeHyper {
    fn default() -> Self {
        TreeHyper {
            min_samples_split: 2,
            max_depth: None,
        }
    }
}

impl TreeNode {
    pub fn predict_class(&self, x: &[f64]) -> usize {
        match self.leaf_for(x) {
            TreeNode::Leaf { histogram } => {
                let h: Vec<f64> = histogram.iter().map(|&c| c as f64).collect();
                argmax_tie_lowest(&h)
            }
            _ => unreachable!("leaf_for returns a leaf"),
        }
    }

    pub fn leaf_for(&self, x: &[f64]) -> &TreeNode {
        match self {
            TreeNode::Leaf { .. } => self,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if x[*feature] <= *threshold {
                    left.leaf_for(x)
                } else {
                    right.leaf_for(x)
                }
            }
        }
    }

    pub fn class_frequencies(&self, x: &[f64]) -> Vec<f64> {
        match self.leaf_for(x) {
            TreeNode::Leaf { histogram } => {
                let total: usize = histogram.iter().sum();
                histogram.iter().map(|&c| c as f64 / total as f64).collect()
            }
            _ => unreachable!("leaf_for returns a leaf"),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

fn gini(hist: &[usize], total: usize) -> f64 {
    let t = total as f64;
    1.0 - hist
        .iter()
        .map(|&c| {
            let p = c as f64 / t;
            p * p
        })
        .sum::<f64>()
}

fn histogram(labels: &[usize], idx: &[usize], n_classes: usize) -> Vec<usize> {
    let mut hist = vec![0usize; n_classes];
    for &i in idx {
        hist[labels[i]] += 1;
    }
    hist
}

struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Candidate features come from `sample_features` (all of them for a plain
/// tree, a random subset per node for forests).
pub fn grow(
    x: ArrayView2<f64>,
    labels: &[usize],
    idx: &[usize],
    n_classes: usize,
    hyper: &TreeHyper,
    sample_features: &mut dyn FnMut(usize) -> Vec<usize>,
    depth: usize,
) -> TreeNode {
    let hist = histogram(labels, idx, n_classes);
    let n = idx.len();
    let parent_gini = gini(&hist, n);
    let depth_capped = hyper.max_depth.is_some_and(|cap| depth >= cap);
    if n < hyper.min_samples_split || parent_gini == 0.0 || depth_capped {
        return TreeNode::Leaf { histogram: hist };
    }

    let mut features = sample_features(x.ncols());
    features.sort_unstable();
    let mut best: Option<BestSplit> = None;
    let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(n);
    for &f in &features {
        sorted.clear();
        sorted.extend(idx.iter().map(|&i| (x[(i, f)], labels[i])));
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut left_hist = vec![0usize; n_classes];
        for (i, &(v, y)) in sorted.iter().enumerate().take(n - 1) {
            left_hist[y] += 1;
            let next = sorted[i + 1].0;
            if v == next {
                continue;
            }
            let n_left = i + 1;
            let n_right = n - n_left;
            let right_hist: Vec<usize> = hist
                .iter()
                .zip(&left_hist)
                .map(|(&total, &l)| total - l)
                .collect();
            let weighted = (n_left as f64 * gini(&left_hist, n_left)
                + n_right as f64 * gini(&right_hist, n_right))
                / n as f64;
            let gain = parent_gini - weighted;
            if best.as_ref().is_none_or(|b| gain > b.gain) {
                let mut threshold = (v + next) / 2.0;
                // adjacent floats can round the midpoint up to `next`;
                // fall back so the right side stays non-empty
                if threshold >= next {
                    threshold = v;
                }
                best = Some(BestSplit {
                    gain,
                    feature: f,
                    threshold,
                });
            }
        }
    }

    let Some(best) = best else {
        // impure but indivisible: duplicate rows with conflicting labels
        return TreeNode::Leaf { histogram: hist };
    };

    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = idx
        .iter()
        .partition(|&&i| x[(i, best.feature)] <= best.threshold);
    TreeNode::Split {
        feature: best.feature,
        threshold: best.threshold,
        left: Box::new(grow(
            x,
            labels,
            &left_idx,
            n_classes,
            hyper,
            sample_features,
            depth + 1,
        )),
        right: Box::new(grow(
            x,
            labels,
            &right_idx,
            n_classes,
            hyper,
            sample_features,
            depth + 1,
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn grow_full(x: ArrayView2<f64>, labels: &[usize], n_classes: usize) -> TreeNode {
        let idx: Vec<usize> = (0..labels.len()).collect();
        grow(
            x,
            labels,
            &idx,
            n_classes,
            &TreeHyper::default(),
            &mut |d| (0..d).collect(),
            0,
        )
    }

    #[test]
    fn xor_is_shattered_by_two_axis_splits() {
        let x = array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
        let labels = [0usize, 1, 1, 0];
        let tree = grow_full(x.view(), &labels, 2);
        assert!(tree.depth() >= 2);
        for (i, &y) in labels.iter().enumerate() {
            let row: Vec<f64> = x.row(i).to_vec();
            assert_eq!(tree.predict_class(&row), y, "point {i}");
        }
    }

    #[test]
    fn pure_node_is_a_leaf() {
        let x = array![[0.1], [0.9], [0.5]];
        let tree = grow_full(x.view(), &[1, 1, 1], 2);
        assert_eq!(tree, TreeNode::Leaf { histogram: vec![0, 3] });
    }

    #[test]
    fn conflicting_duplicates_become_a_leaf() {
        let x = array![[0.5, 0.5], [0.5, 0.5]];
        let tree = grow_full(x.view(), &[0, 1], 2);
        assert_eq!(tree, TreeNode::Leaf { histogram: vec![1, 1] });
    }

    #[test]
    fn leaf_tie_breaks_to_lowest_class() {
        let leaf = TreeNode::Leaf {
            histogram: vec![5, 5],
        };
        assert_eq!(leaf.predict_class(&[0.0]), 0);
        assert_eq!(leaf.class_frequencies(&[0.0]), vec![0.5, 0.5]);
    }

    #[test]
    fn leaf_frequencies_match_histogram() {
        let leaf = TreeNode::Leaf {
            histogram: vec![3, 1],
        };
        assert_eq!(leaf.class_frequencies(&[0.0]), vec![0.75, 0.25]);
    }

    #[test]
    fn depth_cap_is_respected() {
        let x = array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
        let labels = [0usize, 1, 1, 0];
        let idx: Vec<usize> = (0..4).collect();
        let hyper = TreeHyper {
            max_depth: Some(1),
            ..TreeHyper::default()
        };
        let tree = grow(
            x.view(),
            &labels,
            &idx,
            2,
            &hyper,
            &mut |d| (0..d).collect(),
            0,
        );
        assert!(tree.depth() <= 1);
    }

    #[test]
    fn split_ties_prefer_lowest_feature() {
        // one informative feature duplicated; feature 0 must win
        let x = array![[0.0, 0.0], [1.0, 1.0], [0.0, 0.0], [1.0, 1.0]];
        let labels = [0usize, 1, 0, 1];
        let tree = grow_full(x.view(), &labels, 2);
        match tree {
            TreeNode::Split { feature, .. } => assert_eq!(feature, 0),
            _ => panic!("expected a split"),
        }
    }
}
