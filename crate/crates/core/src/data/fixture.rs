//! Synthetic dataset with the same shape as the real traffic records.
//!
//! Ten numeric features carry the class signal as two Gaussian clusters;
//! everything else is noise or constant. Small enough to drive the full
//! pipeline in tests without any external data file.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::raw::{RawDataset, RawRecord, NUM_FEATURES};

const PROTOCOLS: [&str; 3] = ["icmp", "tcp", "udp"];
const SERVICES: [&str; 4] = ["dns", "ftp", "http", "smtp"];
const FLAGS: [&str; 3] = ["REJ", "S0", "SF"];

/// Feature indices whose distribution depends on the class.
const INFORMATIVE: [usize; 10] = [0, 4, 5, 9, 22, 23, 28, 31, 32, 35];

/// `num_outbound_cmds`, constant in the real corpus; kept constant here so
/// degenerate scaling stays exercised.
const CONSTANT_FEATURE: usize = 19;

const MEAN_NORMAL: f64 = 0.35;
const MEAN_ATTACK: f64 = 0.65;
const SIGMA: f64 = 0.12;

/// Generate `n` records, alternating normal and attack rows.
pub fn synth_fixture(seed: u64, n: usize) -> RawDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cluster = |mean: f64| Normal::new(mean, SIGMA).expect("sigma is positive");
    let normal_cluster = cluster(MEAN_NORMAL);
    let attack_cluster = cluster(MEAN_ATTACK);

    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let is_attack = i % 2 == 1;
        let mut features = Vec::with_capacity(NUM_FEATURES);
        for f in 0..NUM_FEATURES {
            let value = match f {
                1 => PROTOCOLS[rng.gen_range(0..PROTOCOLS.len())].to_string(),
                2 => SERVICES[rng.gen_range(0..SERVICES.len())].to_string(),
                3 => FLAGS[rng.gen_range(0..FLAGS.len())].to_string(),
                CONSTANT_FEATURE => "0".to_string(),
                f if INFORMATIVE.contains(&f) => {
                    let dist = if is_attack { attack_cluster } else { normal_cluster };
                    format!("{}", dist.sample(&mut rng).clamp(0.0, 1.0))
                }
                _ => format!("{}", rng.gen::<f64>()),
            };
            features.push(value);
        }
        records.push(RawRecord {
            features,
            label: if is_attack { "synthattack" } else { "normal" }.to_string(),
            difficulty: None,
        });
    }
    RawDataset { records }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{fit_preprocessor, transform, Family, LabelMode};

    #[test]
    fn deterministic_given_seed() {
        assert_eq!(synth_fixture(7, 50), synth_fixture(7, 50));
        assert_ne!(synth_fixture(7, 50), synth_fixture(8, 50));
    }

    #[test]
    fn labels_alternate_and_map_to_families() {
        let ds = synth_fixture(1, 10);
        let normals = ds.records.iter().filter(|r| r.label == "normal").count();
        assert_eq!(normals, 5);
        let prep = fit_preprocessor(&ds).unwrap();
        let t = transform(&prep, &ds, LabelMode::Binary).unwrap();
        assert_eq!(t.labels.iter().filter(|&&y| y == 1).count(), 5);
        assert!(t.families.iter().any(|&f| f == Family::Dos));
        assert!(t.families.iter().any(|&f| f == Family::Normal));
    }

    #[test]
    fn transforms_to_unit_box() {
        let ds = synth_fixture(3, 80);
        let prep = fit_preprocessor(&ds).unwrap();
        let t = transform(&prep, &ds, LabelMode::Binary).unwrap();
        // 38 numeric dims plus one-hot blocks of 3 + 4 + 3
        assert_eq!(t.n_dims(), 48);
        assert!(t.matrix.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn classes_are_separated_on_informative_features() {
        let ds = synth_fixture(11, 400);
        let mean_of = |label: &str, feature: usize| {
            let vals: Vec<f64> = ds
                .records
                .iter()
                .filter(|r| r.label == label)
                .map(|r| r.features[feature].parse::<f64>().unwrap())
                .collect();
            vals.iter().sum::<f64>() / vals.len() as f64
        };
        for f in INFORMATIVE {
            let gap = mean_of("synthattack", f) - mean_of("normal", f);
            assert!(gap > 0.2, "feature {f}: gap {gap}");
        }
    }

    #[test]
    fn constant_feature_stays_constant() {
        let ds = synth_fixture(5, 30);
        assert!(ds
            .records
            .iter()
            .all(|r| r.features[CONSTANT_FEATURE] == "0"));
    }
}
