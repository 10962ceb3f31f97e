//! Newline-delimited JSON dataset files, one `QAInstance` per line.

use std::fmt::Write as _;

use thiserror::Error;

use crate::dump::sha256_hex;
use crate::questgen::QAInstance;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {source}")]
    Record {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("dataset is empty")]
    Empty,
}

pub fn to_ndjson(instances: &[QAInstance]) -> String {
    let mut out = String::new();
    for inst in instances {
        // QAInstance has only string, number and enum fields
        let line = serde_json::to_string(inst).expect("QAInstance serializes");
        let _ = writeln!(out, "{line}");
    }
    out
}

pub fn from_ndjson(text: &str) -> Result<Vec<QAInstance>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(line).map_err(|source| DatasetError::Record { line: i + 1, source })?);
    }
    if out.is_empty() {
        return Err(DatasetError::Empty);
    }
    Ok(out)
}

pub fn digest(text: &str) -> String {
    sha256_hex(text.as_bytes())
}
