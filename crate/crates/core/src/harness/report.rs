//! Report files: a flat metrics table, a JSON summary, and one pivoted
//! curve file per attack method.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::metrics::{MetricRecord, ACCURACY, ROBUST_ACCURACY};
use super::{ExperimentConfig, EXPERIMENT_DETECT_REJECT};

pub const CSV_HEADER: &str = "experiment,method,epsilon,model,metric,value,n";

/// How robust accuracy is scored, quoted in every JSON summary so the
/// numbers cannot be misread.
pub const ROBUST_ACCURACY_DEFINITION: &str = "a clean row counts when classified with its \
    label; an adversarial row counts when rejected or classified with its source label";

/// Everything one experiment run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    /// Snapshot of the fully resolved configuration the run used.
    pub config: ExperimentConfig,
    pub robust_accuracy_definition: String,
    /// Model name to parameter fingerprint.
    pub model_fingerprints: BTreeMap<String, String>,
    /// `method@epsilon` to fingerprint of the crafted feature matrix.
    pub batch_fingerprints: BTreeMap<String, String>,
    pub records: Vec<MetricRecord>,
    /// Stage name to wall-clock seconds. Kept out of the CSV files so
    /// replays of one configuration stay byte-identical.
    pub timings: BTreeMap<String, f64>,
}

/// Render records as CSV text. Floats print in shortest-exact form, so the
/// output is a pure function of the records and two runs producing equal
/// records produce byte-identical files. Each (experiment, method, epsilon,
/// model, metric) cell may appear at most once.
pub fn render_metrics_csv(records: &[MetricRecord]) -> Result<String> {
    let mut seen = BTreeSet::new();
    let mut out = String::with_capacity(48 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        for field in [&r.experiment, &r.method, &r.model, &r.metric] {
            if field.contains(',') || field.contains('\n') {
                return Err(Error::Data(format!("field {field:?} contains a delimiter")));
            }
        }
        let key = (&r.experiment, &r.method, r.epsilon.to_bits(), &r.model, &r.metric);
        if !seen.insert(key) {
            return Err(Error::Data(format!(
                "duplicate metrics cell {}/{}/{}/{}/{}",
                r.experiment, r.method, r.epsilon, r.model, r.metric
            )));
        }
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.experiment, r.method, r.epsilon, r.model, r.metric, r.value, r.n_samples
        )
        .unwrap();
    }
    Ok(out)
}

/// Parse text produced by [`render_metrics_csv`]; numeric fields
/// round-trip exactly.
pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => return Err(Error::Data(format!("bad metrics header: {other:?}"))),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(Error::Data(format!(
                    "metrics line {}: expected 7 fields, found {}",
                    i + 2,
                    f.len()
                )));
            }
            Ok(MetricRecord {
                experiment: f[0].to_owned(),
                method: f[1].to_owned(),
                epsilon: number(f[2], i)?,
                model: f[3].to_owned(),
                metric: f[4].to_owned(),
                value: number(f[5], i)?,
                n_samples: f[6]
                    .parse()
                    .map_err(|_| bad_number(f[6], i))?,
            })
        })
        .collect()
}

fn number(field: &str, line_idx: usize) -> Result<f64> {
    field.parse().map_err(|_| bad_number(field, line_idx))
}

fn bad_number(field: &str, line_idx: usize) -> Error {
    Error::Data(format!(
        "metrics line {}: non-numeric field {field:?}",
        line_idx + 2
    ))
}

pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricRecord>> {
    parse_metrics_csv(&read_text(path)?)
}

pub fn read_report(path: &Path) -> Result<ExperimentReport> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| Error::Data(format!("report parse: {e}")))
}

/// Write `metrics.csv`, `report.json`, and one `curves_<method>.csv` per
/// attack method into `dir`, creating it if needed. Curve files pivot the
/// headline metric (accuracy, or robust accuracy for rejection runs) into
/// one epsilon row per sweep point and one column per model.
pub fn write_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.display().to_string(),
        source,
    })?;
    write_text(&dir.join("metrics.csv"), &render_metrics_csv(&report.records)?)?;

    let mut json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Data(format!("report serialization: {e}")))?;
    json.push('\n');
    write_text(&dir.join("report.json"), &json)?;

    let metric = match report.experiment == EXPERIMENT_DETECT_REJECT {
        true => ROBUST_ACCURACY,
        false => ACCURACY,
    };
    let mut methods = Vec::new();
    for r in &report.records {
        if !methods.contains(&r.method) {
            methods.push(r.method.clone());
        }
    }
    for method in methods {
        let text = render_curves(&report.records, &method, metric)?;
        write_text(&dir.join(format!("curves_{method}.csv")), &text)?;
    }
    Ok(())
}

/// Pivot one method's records into epsilon rows and model columns.
fn render_curves(records: &[MetricRecord], method: &str, metric: &str) -> Result<String> {
    let mut models: Vec<&str> = Vec::new();
    let mut epsilons: Vec<f64> = Vec::new();
    let mut cells: BTreeMap<(u64, &str), f64> = BTreeMap::new();
    for r in records.iter().filter(|r| r.method == method && r.metric == metric) {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
        if !epsilons.iter().any(|e| e.to_bits() == r.epsilon.to_bits()) {
            epsilons.push(r.epsilon);
        }
        cells.insert((r.epsilon.to_bits(), &r.model), r.value);
    }
    if models.is_empty() {
        return Err(Error::Data(format!("no {metric} records for method {method:?}")));
    }
    epsilons.sort_by(f64::total_cmp);

    let mut out = String::from("epsilon");
    for m in &models {
        out.push(',');
        out.push_str(m);
    }
    out.push('\n');
    for &eps in &epsilons {
        write!(out, "{eps}").unwrap();
        for m in &models {
            let v = cells.get(&(eps.to_bits(), m)).ok_or_else(|| {
                Error::Data(format!("model {m:?} has no {metric} at epsilon {eps}"))
            })?;
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(method: &str, eps: f64, model: &str, metric: &str, value: f64) -> MetricRecord {
        MetricRecord {
            experiment: "transfer".to_owned(),
            method: method.to_owned(),
            epsilon: eps,
            model: model.to_owned(),
            metric: metric.to_owned(),
            value,
            n_samples: 60,
        }
    }

    #[test]
    fn records_round_trip_bit_exactly_through_csv() {
        // Deliberately awkward values: shortest-exact printing must bring
        // every one of them back bit-for-bit.
        let records = vec![
            rec("fgsm", 0.0, "dnn", ACCURACY, 1.0 / 3.0),
            rec("fgsm", 0.1 + 0.2, "dnn", ACCURACY, 0.1 + 0.7),
            rec("pgd", 1e-300, "svm", ACCURACY, f64::MIN_POSITIVE),
            rec("pgd", 0.5, "lda", "rejection_rate", 0.0),
        ];
        let text = render_metrics_csv(&records).unwrap();
        assert_eq!(parse_metrics_csv(&text).unwrap(), records);
    }

    #[test]
    fn empty_records_render_as_a_bare_header() {
        let text = render_metrics_csv(&[]).unwrap();
        assert_eq!(text, format!("{CSV_HEADER}\n"));
        assert_eq!(parse_metrics_csv(&text).unwrap(), Vec::new());
    }

    #[test]
    fn duplicate_cells_are_rejected() {
        let records = vec![
            rec("fgsm", 0.1, "dnn", ACCURACY, 0.5),
            rec("fgsm", 0.1, "dnn", ACCURACY, 0.6),
        ];
        let err = render_metrics_csv(&records).unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn delimiter_bearing_fields_are_rejected() {
        let records = vec![rec("fgsm,pgd", 0.1, "dnn", ACCURACY, 0.5)];
        assert!(render_metrics_csv(&records).is_err());
    }

    #[test]
    fn malformed_csv_text_is_rejected() {
        assert!(parse_metrics_csv("nonsense\n").is_err());
        assert!(parse_metrics_csv(&format!("{CSV_HEADER}\na,b,c\n")).is_err());
        assert!(parse_metrics_csv(&format!("{CSV_HEADER}\nt,fgsm,zero,dnn,accuracy,0.5,60\n")).is_err());
    }

    #[test]
    fn curves_pivot_epsilon_rows_against_model_columns() {
        let records = vec![
            rec("fgsm", 0.0, "dnn", ACCURACY, 0.975),
            rec("fgsm", 0.0, "svm", ACCURACY, 0.95),
            rec("fgsm", 0.5, "dnn", ACCURACY, 0.25),
            rec("fgsm", 0.5, "svm", ACCURACY, 0.75),
            // Another metric in the mix must not leak into the pivot.
            rec("fgsm", 0.5, "svm", "accuracy_attack", 0.9),
        ];
        let text = render_curves(&records, "fgsm", ACCURACY).unwrap();
        assert_eq!(text, "epsilon,dnn,svm\n0,0.975,0.95\n0.5,0.25,0.75\n");
    }

    #[test]
    fn a_model_missing_one_sweep_point_is_an_error() {
        let records = vec![
            rec("fgsm", 0.0, "dnn", ACCURACY, 0.975),
            rec("fgsm", 0.5, "dnn", ACCURACY, 0.25),
            rec("fgsm", 0.5, "svm", ACCURACY, 0.75),
        ];
        assert!(render_curves(&records, "fgsm", ACCURACY).is_err());
        assert!(render_curves(&records, "pgd", ACCURACY).is_err());
    }

    #[test]
    fn write_report_emits_the_three_artifact_kinds() {
        let dir = tempfile::tempdir().unwrap();
        let report = ExperimentReport {
            experiment: "transfer".to_owned(),
            config: ExperimentConfig::default(),
            robust_accuracy_definition: ROBUST_ACCURACY_DEFINITION.to_owned(),
            model_fingerprints: BTreeMap::from([("dnn".to_owned(), "abc123".to_owned())]),
            batch_fingerprints: BTreeMap::from([("fgsm@0.5".to_owned(), "def456".to_owned())]),
            records: vec![
                rec("fgsm", 0.0, "dnn", ACCURACY, 0.975),
                rec("fgsm", 0.5, "dnn", ACCURACY, 0.25),
            ],
            timings: BTreeMap::from([("total_s".to_owned(), 1.25)]),
        };
        write_report(&report, dir.path()).unwrap();

        let parsed = read_metrics_csv(&dir.path().join("metrics.csv")).unwrap();
        assert_eq!(parsed, report.records);
        let loaded = read_report(&dir.path().join("report.json")).unwrap();
        assert_eq!(loaded, report);
        let curves = std::fs::read_to_string(dir.path().join("curves_fgsm.csv")).unwrap();
        assert_eq!(curves, "epsilon,dnn\n0,0.975\n0.5,0.25\n");
    }
}
