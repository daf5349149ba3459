//! Flat `key = value` configuration files.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Every key must be one the harness knows; unknown keys are errors so a
//! typo cannot silently fall back to a default. List values are
//! comma-separated.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::attacks::AttackMethod;
use crate::error::{Error, Result};

use super::{DataSource, ExperimentConfig};

/// Read and parse a configuration file, then validate the result.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

/// Parse configuration text over the default [`ExperimentConfig`].
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected `key = value`, got {line:?}", idx + 1))
        })?;
        // Attach the line number without stacking two "invalid configuration"
        // prefixes when the inner error is already a config error.
        apply(&mut cfg, key.trim(), value.trim()).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("line {}: {m}", idx + 1)),
            other => Error::Config(format!("line {}: {other}", idx + 1)),
        })?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn apply(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<()> {
    match key {
        "seed" => cfg.seed = scalar(key, value)?,
        "data.path" => cfg.data = DataSource::File(PathBuf::from(value)),
        "data.fixture" => cfg.data = DataSource::Fixture { n: scalar(key, value)? },
        "split.test_fraction" => cfg.split.test_fraction = scalar(key, value)?,
        "attack.methods" => {
            cfg.methods = value
                .split(',')
                .map(|m| AttackMethod::from_str(m.trim()))
                .collect::<Result<Vec<_>>>()?;
        }
        "attack.epsilons" => cfg.epsilons = list(key, value)?,
        "attack.pgd_iters" => cfg.pgd_iters = scalar(key, value)?,
        "attack.pgd_step" => {
            cfg.pgd_step = match value {
                "auto" => None,
                v => Some(scalar(key, v)?),
            };
        }
        "attack.random_start" => cfg.random_start = scalar(key, value)?,
        "defense.dr_epsilon" => cfg.dr_epsilon = scalar(key, value)?,
        "surrogate.hidden" => cfg.surrogate.hidden = list(key, value)?,
        "surrogate.dropout" => cfg.surrogate.dropout = scalar(key, value)?,
        "surrogate.epochs" => cfg.surrogate.epochs = scalar(key, value)?,
        "surrogate.batch_size" => cfg.surrogate.batch_size = scalar(key, value)?,
        "surrogate.learning_rate" => cfg.surrogate.learning_rate = scalar(key, value)?,
        "victims.svm.c" => cfg.victims.svm.c = scalar(key, value)?,
        "victims.svm.epochs" => cfg.victims.svm.epochs = scalar(key, value)?,
        "victims.svm.learning_rate" => cfg.victims.svm.learning_rate = scalar(key, value)?,
        "victims.logreg.l2" => cfg.victims.logreg.l2 = scalar(key, value)?,
        "victims.logreg.epochs" => cfg.victims.logreg.epochs = scalar(key, value)?,
        "victims.logreg.learning_rate" => cfg.victims.logreg.learning_rate = scalar(key, value)?,
        "victims.tree.min_samples_split" => {
            cfg.victims.tree.min_samples_split = scalar(key, value)?
        }
        "victims.tree.max_depth" => {
            cfg.victims.tree.max_depth = match value {
                "none" => None,
                v => Some(scalar(key, v)?),
            };
        }
        "victims.forest.n_trees" => cfg.victims.forest.n_trees = scalar(key, value)?,
        "victims.forest.tree.min_samples_split" => {
            cfg.victims.forest.tree.min_samples_split = scalar(key, value)?
        }
        "victims.forest.tree.max_depth" => {
            cfg.victims.forest.tree.max_depth = match value {
                "none" => None,
                v => Some(scalar(key, v)?),
            };
        }
        "victims.lda.ridge" => cfg.victims.lda.ridge = scalar(key, value)?,
        _ => return Err(Error::Config(format!("unknown key {key:?}"))),
    }
    Ok(())
}

fn scalar<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value.split(',').map(|v| scalar(key, v.trim())).collect()
}
