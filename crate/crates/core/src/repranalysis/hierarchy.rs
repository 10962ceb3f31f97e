use serde::{Deserialize, Serialize};
use taxoprobe_stats::{pairwise_cosine, rsa, Matrix, RsaSummary, WhitenOptions, Whitener};

use super::{expect_role, AnalysisError, DumpRef, Result};
use crate::dump::{DumpRole, EmbeddingDump};
use crate::taxonomy::Taxonomy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchyRsaOptions {
    pub subsets: usize,
    pub subset_size: usize,
    pub seed: u64,
    /// Add a small ridge to the covariance before whitening.
    pub ridge: bool,
}

impl Default for HierarchyRsaOptions {
    fn default() -> Self {
        Self {
            subsets: 100,
            subset_size: 100,
            seed: 0,
            ridge: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrices {
    pub vlm: Matrix,
    pub lm: Matrix,
    pub taxonomy: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyRsaReport {
    pub vlm: DumpRef,
    pub lm: DumpRef,
    pub options: HierarchyRsaOptions,
    pub concepts: Vec<String>,
    pub vlm_vs_taxonomy: RsaSummary,
    pub lm_vs_taxonomy: RsaSummary,
    pub vlm_vs_lm: RsaSummary,
    #[serde(skip)]
    pub matrices: Option<SimilarityMatrices>,
}

fn concept_similarity(d: &EmbeddingDump, rows: &[usize], ridge: bool) -> Result<Matrix> {
    let w = Whitener::fit(&d.matrix, WhitenOptions { ridge })?;
    let whitened = w.apply(&d.matrix)?;
    Ok(pairwise_cosine(&whitened.select_rows(rows))?)
}

/// Whitens both unembedding matrices, compares cosine similarities among
/// the taxonomy concepts in them with each other and with path similarity.
pub fn hierarchy_rsa_report(
    vlm: &EmbeddingDump,
    lm: &EmbeddingDump,
    t: &Taxonomy,
    opts: HierarchyRsaOptions,
) -> Result<HierarchyRsaReport> {
    expect_role(vlm, DumpRole::Unembedding)?;
    expect_role(lm, DumpRole::Unembedding)?;
    if vlm.manifest.labels != lm.manifest.labels {
        return Err(AnalysisError::LabelMismatch(format!(
            "`{}` and `{}` list different vocabularies",
            vlm.name, lm.name
        )));
    }
    let (rows, concepts): (Vec<usize>, Vec<String>) = vlm
        .manifest
        .labels
        .iter()
        .enumerate()
        .filter(|(_, l)| t.contains(l))
        .map(|(i, l)| (i, l.clone()))
        .unzip();
    if concepts.len() < 3 {
        return Err(AnalysisError::Empty(format!(
            "{} taxonomy concepts in the vocabulary, need at least 3",
            concepts.len()
        )));
    }
    let vlm_sim = concept_similarity(vlm, &rows, opts.ridge)?;
    let lm_sim = concept_similarity(lm, &rows, opts.ridge)?;
    let path = Matrix::new(concepts.len(), concepts.len(), t.path_similarity_matrix(&concepts)?)?
        .with_row_labels(concepts.clone())?;
    let summary = |a: &Matrix, b: &Matrix| rsa(a, b, opts.subsets, opts.subset_size, opts.seed);
    Ok(HierarchyRsaReport {
        vlm: vlm.into(),
        lm: lm.into(),
        options: opts,
        vlm_vs_taxonomy: summary(&vlm_sim, &path)?,
        lm_vs_taxonomy: summary(&lm_sim, &path)?,
        vlm_vs_lm: summary(&vlm_sim, &lm_sim)?,
        concepts,
        matrices: Some(SimilarityMatrices {
            vlm: vlm_sim,
            lm: lm_sim,
            taxonomy: path,
        }),
    })
}
