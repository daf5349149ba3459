//! NSL-KDD text ingestion.
//!
//! Records are comma-separated: 41 features, the attack label, and an
//! optional difficulty score. The field order is documented in
//! `docs/schema.md` at the repository root.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use crate::error::{Error, Result};

pub const NUM_FEATURES: usize = 41;

/// Feature indices holding categorical tokens: protocol_type, service, flag.
pub const CATEGORICAL_FEATURES: [usize; 3] = [1, 2, 3];

pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "duration",
    "protocol_type",
    "service",
    "flag",
    "src_bytes",
    "dst_bytes",
    "land",
    "wrong_fragment",
    "urgent",
    "hot",
    "num_failed_logins",
    "logged_in",
    "num_compromised",
    "root_shell",
    "su_attempted",
    "num_root",
    "num_file_creations",
    "num_shells",
    "num_access_files",
    "num_outbound_cmds",
    "is_host_login",
    "is_guest_login",
    "count",
    "srv_count",
    "serror_rate",
    "srv_serror_rate",
    "rerror_rate",
    "srv_rerror_rate",
    "same_srv_rate",
    "diff_srv_rate",
    "srv_diff_host_rate",
    "dst_host_count",
    "dst_host_srv_count",
    "dst_host_same_srv_rate",
    "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate",
    "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate",
    "dst_host_srv_serror_rate",
    "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
];

pub fn is_categorical(feature: usize) -> bool {
    CATEGORICAL_FEATURES.contains(&feature)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    /// Exactly 41 raw values, a mixture of numeric strings and tokens.
    pub features: Vec<String>,
    pub label: String,
    /// NSL-KDD difficulty column; parsed and ignored downstream.
    pub difficulty: Option<i64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawDataset {
    pub records: Vec<RawRecord>,
}

impl RawDataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> RawDataset {
        RawDataset {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }
}

/// Load an NSL-KDD file (KDDTrain+ layout). Record order is preserved.
pub fn load_nslkdd(path: impl AsRef<Path>) -> Result<RawDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_nslkdd(BufReader::new(file))
}

/// Parse NSL-KDD records from any reader; line numbers are 1-based.
pub fn parse_nslkdd<R: Read>(reader: R) -> Result<RawDataset> {
    let mut records = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::io(format!("line {}", idx + 1), e))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        records.push(parse_record(line, idx + 1)?);
    }
    Ok(RawDataset { records })
}

fn parse_record(line: &str, line_no: usize) -> Result<RawRecord> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != NUM_FEATURES + 1 && fields.len() != NUM_FEATURES + 2 {
        return Err(Error::MalformedLine {
            line: line_no,
            expected: "42 or 43",
            found: fields.len(),
        });
    }
    let features: Vec<String> = fields[..NUM_FEATURES].iter().map(|s| s.to_string()).collect();
    let label = fields[NUM_FEATURES].to_string();
    if label.is_empty() {
        return Err(Error::Data(format!("line {line_no}: empty label")));
    }
    let difficulty = if fields.len() == NUM_FEATURES + 2 {
        Some(fields[NUM_FEATURES + 1].parse::<i64>().map_err(|_| Error::Data(format!(
            "line {line_no}: non-integer difficulty {:?}",
            fields[NUM_FEATURES + 1]
        )))?)
    } else {
        None
    };
    Ok(RawRecord {
        features,
        label,
        difficulty,
    })
}
