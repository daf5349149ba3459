//! Helpers for unit tests: fabricate small in-memory datasets without going
//! through the text ingestion path.

use std::sync::Arc;

use ndarray::Array2;

use crate::data::{Dataset, DimDescriptor, Family, Schema};

/// Wrap a matrix and labels in a dataset with a synthetic schema.
pub(crate) fn make_dataset(matrix: Array2<f64>, labels: Vec<usize>, n_classes: usize) -> Dataset {
    assert_eq!(matrix.nrows(), labels.len());
    let schema = Schema {
        dims: (0..matrix.ncols())
            .map(|i| DimDescriptor {
                feature: format!("f{i}"),
                token: None,
            })
            .collect(),
        class_names: (0..n_classes).map(|c| format!("class{c}")).collect(),
    };
    let families = labels
        .iter()
        .map(|&y| if y == 0 { Family::Normal } else { Family::Dos })
        .collect();
    Dataset {
        matrix,
        labels,
        families,
        schema: Arc::new(schema),
    }
}

/// Isotropic Gaussian clusters, one per center, clamped to the unit box;
/// labels are cluster indices.
pub(crate) fn blobs(seed: u64, n_per_class: usize, centers: &[[f64; 2]], sigma: f64) -> Dataset {
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).expect("sigma is positive");
    let n = n_per_class * centers.len();
    let mut matrix = Array2::zeros((n, 2));
    let mut labels = Vec::with_capacity(n);
    let mut row = 0;
    for (k, c) in centers.iter().enumerate() {
        for _ in 0..n_per_class {
            for j in 0..2 {
                matrix[(row, j)] = (c[j] + noise.sample(&mut rng)).clamp(0.0, 1.0);
            }
            labels.push(k);
            row += 1;
        }
    }
    make_dataset(matrix, labels, centers.len())
}

/// The four XOR points tiled `reps` times.
pub(crate) fn xor_dataset(reps: usize) -> Dataset {
    let points = [
        ([0.0, 0.0], 0),
        ([0.0, 1.0], 1),
        ([1.0, 0.0], 1),
        ([1.0, 1.0], 0),
    ];
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for _ in 0..reps {
        for (p, y) in points {
            rows.push(p);
            labels.push(y);
        }
    }
    let matrix = Array2::from_shape_fn((rows.len(), 2), |(i, j)| rows[i][j]);
    make_dataset(matrix, labels, 2)
}
