pub mod analyze;
pub mod build;
pub mod eval;
pub mod metrics;
pub mod mock;
pub mod taxomps;
pub mod validate;

use std::fs;
use std::path::Path;

use anyhow::Context as _;
use serde::{Deserialize, Serialize};
use taxoprobe_core::dataset::from_ndjson;
use taxoprobe_core::{QAInstance, Taxonomy};
use taxoprobe_eval::EvalRun;

use crate::config::Provenance;
use crate::error::{Classify, CliResult};

/// Contents of `run.<mode>.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunFile {
    pub provenance: Provenance,
    pub run: EvalRun,
}

/// Companion of a pure NDJSON dataset file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetFile {
    pub file: String,
    pub sha256: String,
    pub n_instances: usize,
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .data()
}

pub fn load_taxonomy(path: &Path) -> CliResult<Taxonomy> {
    read_text(path)?
        .parse::<Taxonomy>()
        .with_context(|| format!("taxonomy {}", path.display()))
        .data()
}

pub fn load_dataset(path: &Path) -> CliResult<Vec<QAInstance>> {
    from_ndjson(&read_text(path)?)
        .with_context(|| format!("dataset {}", path.display()))
        .data()
}

pub fn load_run(path: &Path) -> CliResult<RunFile> {
    serde_json::from_str(&read_text(path)?)
        .with_context(|| format!("run file {}", path.display()))
        .data()
}

/// Keeps a model id or dump name usable as a file name component.
pub fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') { c } else { '_' })
        .collect()
}
