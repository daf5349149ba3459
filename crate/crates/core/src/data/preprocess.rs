//! Preprocessing: categorical one-hot numericalization, min-max scaling to
//! `[0,1]`, and label binarization.
//!
//! The preprocessor is fitted once (on Training data A in the experiment
//! pipeline) and reused for every partition so that all models share one
//! feature space and adversarial vectors transfer unchanged.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::families::{family_of, Family};
use super::raw::{is_categorical, RawDataset, FEATURE_NAMES, NUM_FEATURES};
use super::{Dataset, DimDescriptor, LabelMode, Schema};
use crate::error::{Error, Result};

/// Fitted preprocessing state. Transformation is a pure function of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    /// Categorical feature index -> lexicographically ordered token vocabulary.
    pub categorical_vocabs: BTreeMap<usize, Vec<String>>,
    /// Numeric feature index -> (min, max) observed while fitting.
    pub numeric_ranges: BTreeMap<usize, (f64, f64)>,
}

impl Preprocessor {
    /// Output dimensionality: numeric features plus total vocabulary size.
    pub fn n_dims(&self) -> usize {
        self.numeric_ranges.len() + self.categorical_vocabs.values().map(Vec::len).sum::<usize>()
    }

    /// Schema of the transformed space under the given label mode.
    pub fn schema(&self, mode: LabelMode) -> Schema {
        let mut dims = Vec::with_capacity(self.n_dims());
        for (idx, name) in FEATURE_NAMES.iter().enumerate() {
            if is_categorical(idx) {
                for token in &self.categorical_vocabs[&idx] {
                    dims.push(DimDescriptor {
                        feature: (*name).into(),
                        token: Some(token.clone()),
                    });
                }
            } else {
                dims.push(DimDescriptor {
                    feature: (*name).into(),
                    token: None,
                });
            }
        }
        Schema {
            dims,
            class_names: mode.class_names(),
        }
    }
}

fn parse_numeric(value: &str, feature: usize, line: usize) -> Result<f64> {
    let v: f64 = value.parse().map_err(|_| Error::NonNumericFeature {
        line,
        feature: FEATURE_NAMES[feature],
        value: value.to_string(),
    })?;
    if !v.is_finite() {
        return Err(Error::NonNumericFeature {
            line,
            feature: FEATURE_NAMES[feature],
            value: value.to_string(),
        });
    }
    Ok(v)
}

/// Fit vocabularies and numeric ranges on `raw`. Deterministic for a given
/// input: vocabularies are sorted lexicographically.
pub fn fit_preprocessor(raw: &RawDataset) -> Result<Preprocessor> {
    if raw.is_empty() {
        return Err(Error::Data("cannot fit a preprocessor on an empty dataset".into()));
    }
    let mut vocab_sets: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
    let mut ranges: BTreeMap<usize, (f64, f64)> = BTreeMap::new();

    for (rec_idx, rec) in raw.records.iter().enumerate() {
        if rec.features.len() != NUM_FEATURES {
            return Err(Error::MalformedLine {
                line: rec_idx + 1,
                expected: "41 features",
                found: rec.features.len(),
            });
        }
        for (f, value) in rec.features.iter().enumerate() {
            if is_categorical(f) {
                vocab_sets.entry(f).or_default().insert(value.clone());
            } else {
                let v = parse_numeric(value, f, rec_idx + 1)?;
                let entry = ranges.entry(f).or_insert((v, v));
                entry.0 = entry.0.min(v);
                entry.1 = entry.1.max(v);
            }
        }
    }

    Ok(Preprocessor {
        categorical_vocabs: vocab_sets
            .into_iter()
            .map(|(f, set)| (f, set.into_iter().collect()))
            .collect(),
        numeric_ranges: ranges,
    })
}

/// Transform raw records into the numeric `[0,1]` feature space.
///
/// Numeric features scale as `(x - min) / (max - min)` and clamp to `[0,1]`;
/// a feature with `min == max` maps to 0. Unseen categorical tokens encode as
/// an all-zero one-hot block.
pub fn transform(prep: &Preprocessor, raw: &RawDataset, mode: LabelMode) -> Result<Dataset> {
    let n_dims = prep.n_dims();
    let mut matrix = Array2::zeros((raw.len(), n_dims));
    let mut labels = Vec::with_capacity(raw.len());
    let mut families: Vec<Family> = Vec::with_capacity(raw.len());

    for (row, rec) in raw.records.iter().enumerate() {
        if rec.features.len() != NUM_FEATURES {
            return Err(Error::MalformedLine {
                line: row + 1,
                expected: "41 features",
                found: rec.features.len(),
            });
        }
        let mut col = 0;
        for (f, value) in rec.features.iter().enumerate() {
            if let Some(vocab) = prep.categorical_vocabs.get(&f) {
                if let Ok(pos) = vocab.binary_search(value) {
                    matrix[[row, col + pos]] = 1.0;
                }
                col += vocab.len();
            } else {
                let (min, max) = prep.numeric_ranges[&f];
                let v = parse_numeric(value, f, row + 1)?;
                let scaled = if max > min { ((v - min) / (max - min)).clamp(0.0, 1.0) } else { 0.0 };
                matrix[[row, col]] = scaled;
                col += 1;
            }
        }
        labels.push(match (mode, rec.label.as_str()) {
            (_, "normal") => 0,
            (LabelMode::TernaryWithAdversarial, "adversarial") => 2,
            _ => 1,
        });
        families.push(family_of(&rec.label)?);
    }

    Ok(Dataset {
        matrix,
        labels,
        families,
        schema: Arc::new(prep.schema(mode)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::raw::parse_nslkdd;

    pub(crate) fn record(protocol: &str, service: &str, flag: &str, duration: &str, label: &str) -> String {
        let mut fields = vec![duration.to_string(), protocol.into(), service.into(), flag.into()];
        fields.extend(std::iter::repeat("0".to_string()).take(NUM_FEATURES - 4));
        fields.push(label.into());
        fields.join(",")
    }

    fn tiny_raw() -> RawDataset {
        let text = [
            record("tcp", "http", "SF", "2", "normal"),
            record("udp", "dns", "S0", "10", "neptune"),
            record("icmp", "http", "SF", "4", "normal"),
        ]
        .join("\n");
        parse_nslkdd(text.as_bytes()).unwrap()
    }

    #[test]
    fn vocab_is_lexicographic() {
        let prep = fit_preprocessor(&tiny_raw()).unwrap();
        assert_eq!(prep.categorical_vocabs[&1], vec!["icmp", "tcp", "udp"]);
        assert_eq!(prep.categorical_vocabs[&2], vec!["dns", "http"]);
    }

    #[test]
    fn single_record_has_degenerate_ranges() {
        let text = record("tcp", "http", "SF", "7", "normal");
        let raw = parse_nslkdd(text.as_bytes()).unwrap();
        let prep = fit_preprocessor(&raw).unwrap();
        for (_, (min, max)) in &prep.numeric_ranges {
            assert_eq!(min, max);
        }
    }

    #[test]
    fn non_numeric_token_in_numeric_position_is_rejected() {
        let text = record("tcp", "http", "SF", "abc", "normal");
        let raw = parse_nslkdd(text.as_bytes()).unwrap();
        let err = fit_preprocessor(&raw).unwrap_err();
        assert!(matches!(err, Error::NonNumericFeature { feature: "duration", .. }));
    }

    #[test]
    fn empty_fit_is_rejected() {
        assert!(fit_preprocessor(&RawDataset::default()).is_err());
    }

    #[test]
    fn one_hot_encoding_and_minmax_endpoints() {
        let raw = tiny_raw();
        let prep = fit_preprocessor(&raw).unwrap();
        let ds = transform(&prep, &raw, LabelMode::Binary).unwrap();

        // Dimension layout: duration, protocol block [icmp,tcp,udp], ...
        assert_eq!(ds.n_dims(), prep.n_dims());
        // Row 0 duration=2 is the fitted min -> 0.0; row 1 duration=10 is max -> 1.0.
        assert_eq!(ds.matrix[[0, 0]], 0.0);
        assert_eq!(ds.matrix[[1, 0]], 1.0);
        // Row 0 protocol tcp -> [0,1,0] against vocab [icmp,tcp,udp].
        assert_eq!(ds.matrix[[0, 1]], 0.0);
        assert_eq!(ds.matrix[[0, 2]], 1.0);
        assert_eq!(ds.matrix[[0, 3]], 0.0);
    }

    #[test]
    fn labels_binarize() {
        let raw = tiny_raw();
        let prep = fit_preprocessor(&raw).unwrap();
        let ds = transform(&prep, &raw, LabelMode::Binary).unwrap();
        assert_eq!(ds.labels, vec![0, 1, 0]);
        assert_eq!(ds.schema.class_names, vec!["normal", "intrusion"]);
    }

    #[test]
    fn unseen_token_encodes_as_zero_block_and_out_of_range_clamps() {
        let raw = tiny_raw();
        let prep = fit_preprocessor(&raw).unwrap();
        let unseen = record("tcp", "telnet", "SF", "99", "normal");
        let raw2 = parse_nslkdd(unseen.as_bytes()).unwrap();
        let ds = transform(&prep, &raw2, LabelMode::Binary).unwrap();
        // service block (vocab [dns, http]) is all zero
        let service_cols = 1 + 3; // duration + protocol block
        assert_eq!(ds.matrix[[0, service_cols]], 0.0);
        assert_eq!(ds.matrix[[0, service_cols + 1]], 0.0);
        // duration 99 is beyond the fitted max of 10 -> clamps to 1.0
        assert_eq!(ds.matrix[[0, 0]], 1.0);
        // everything stays in [0,1]
        assert!(ds.matrix.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn min_equals_max_maps_to_zero() {
        let text = [
            record("tcp", "http", "SF", "5", "normal"),
            record("tcp", "http", "SF", "5", "neptune"),
        ]
        .join("\n");
        let raw = parse_nslkdd(text.as_bytes()).unwrap();
        let prep = fit_preprocessor(&raw).unwrap();
        let ds = transform(&prep, &raw, LabelMode::Binary).unwrap();
        assert_eq!(ds.matrix[[0, 0]], 0.0);
        assert_eq!(ds.matrix[[1, 0]], 0.0);
    }

    #[test]
    fn transform_is_deterministic() {
        let raw = tiny_raw();
        let prep1 = fit_preprocessor(&raw).unwrap();
        let prep2 = fit_preprocessor(&raw).unwrap();
        assert_eq!(prep1, prep2);
        let a = transform(&prep1, &raw, LabelMode::Binary).unwrap();
        let b = transform(&prep2, &raw, LabelMode::Binary).unwrap();
        assert_eq!(a.matrix, b.matrix);
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn ternary_mode_reserves_third_class() {
        let raw = tiny_raw();
        let prep = fit_preprocessor(&raw).unwrap();
        let ds = transform(&prep, &raw, LabelMode::TernaryWithAdversarial).unwrap();
        assert_eq!(ds.schema.class_names.len(), 3);
        assert_eq!(ds.schema.class_names[2], "adversarial");
        // raw records never carry the adversarial class
        assert!(ds.labels.iter().all(|&l| l < 2));
    }

    #[test]
    fn schema_width_matches_vocab_sizes() {
        let raw = tiny_raw();
        let prep = fit_preprocessor(&raw).unwrap();
        let expected = 38 + prep.categorical_vocabs.values().map(Vec::len).sum::<usize>();
        assert_eq!(prep.n_dims(), expected);
        let ds = transform(&prep, &raw, LabelMode::Binary).unwrap();
        assert_eq!(ds.n_dims(), expected);
        assert_eq!(ds.schema.dims.len(), expected);
    }
}
