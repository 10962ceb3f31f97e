//! Representational analyses over embedding dumps and evaluation results.

mod delta;
mod hierarchy;
mod odds;
mod separability;
mod visual;

pub use delta::{static_delta_report, DeltaRow, StaticDeltaOptions, StaticDeltaReport};
pub use hierarchy::{hierarchy_rsa_report, HierarchyRsaOptions, HierarchyRsaReport, SimilarityMatrices};
pub use odds::{analysis_subset, layerwise_odds_report, LayerOdds, LayerwiseOddsReport, SimilarityFeatures};
pub use separability::{separability_report, PcaPoint, SeparabilityOptions, SeparabilityReport};
pub use visual::{
    cohesion, median, visual_similarity_report, CohesionRow, SkippedVisualPair, VisualOptions, VisualReport,
    VisualSimilarityRecord,
};

use serde::{Deserialize, Serialize};
use taxoprobe_stats::{Matrix, StatsError};
use thiserror::Error;

use crate::dump::{DumpRole, EmbeddingDump};
use crate::taxonomy::TaxonomyError;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("dump `{dump}` has role {found:?}, expected {expected:?}")]
    WrongRole {
        dump: String,
        expected: DumpRole,
        found: DumpRole,
    },
    #[error("label mismatch: {0}")]
    LabelMismatch(String),
    #[error("dump `{dump}` has no row for `{concept}`")]
    MissingConcept { dump: String, concept: String },
    #[error("span resolution failed: {0}")]
    Span(String),
    #[error("layer mismatch: {0}")]
    LayerMismatch(String),
    #[error("no pairs for hypernym `{0}`")]
    NoPairs(String),
    #[error("nothing to analyze: {0}")]
    Empty(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
}

pub type Result<T, E = AnalysisError> = std::result::Result<T, E>;

/// Which dump a report was computed from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DumpRef {
    pub name: String,
    pub model_id: String,
    pub role: DumpRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer: Option<usize>,
    pub payload_sha256: String,
}

impl From<&EmbeddingDump> for DumpRef {
    fn from(d: &EmbeddingDump) -> Self {
        Self {
            name: d.name.clone(),
            model_id: d.manifest.model_id.clone(),
            role: d.manifest.role,
            layer: d.manifest.layer,
            payload_sha256: d.manifest.payload_sha256.clone(),
        }
    }
}

fn expect_role(d: &EmbeddingDump, role: DumpRole) -> Result<()> {
    if d.manifest.role == role {
        Ok(())
    } else {
        Err(AnalysisError::WrongRole {
            dump: d.name.clone(),
            expected: role,
            found: d.manifest.role,
        })
    }
}

/// Square matrix as CSV with a header row and a label column.
pub fn square_matrix_csv(m: &Matrix) -> String {
    let labels: Vec<String> = (0..m.rows()).map(|i| m.row_name(i)).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![String::new()];
    header.extend(labels.iter().cloned());
    // writes into a Vec cannot fail
    w.write_record(&header).expect("in-memory csv");
    for (i, label) in labels.iter().enumerate() {
        let mut rec = vec![label.clone()];
        rec.extend(m.row(i).iter().map(|v| format!("{v}")));
        w.write_record(&rec).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

/// Serializes rows with the csv crate's serde support.
pub fn rows_csv<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}
