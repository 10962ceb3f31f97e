use serde::{Deserialize, Serialize};
use taxoprobe_stats::{pca, svm_fit_with, SvmOptions, SvmResult};

use super::{expect_role, AnalysisError, DumpRef, Result};
use crate::dump::{DumpRole, EmbeddingDump};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityOptions {
    pub c: f64,
    pub iterations: usize,
}

impl Default for SeparabilityOptions {
    fn default() -> Self {
        let d = SvmOptions::default();
        Self {
            c: d.c,
            iterations: d.iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaPoint {
    pub label: String,
    /// "hypernym" or "negative".
    pub class: String,
    pub pc1: f64,
    pub pc2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityReport {
    pub dump: DumpRef,
    pub options: SeparabilityOptions,
    pub n_hypernym: usize,
    pub n_negative: usize,
    pub explained_variance: Vec<f64>,
    pub total_variance: f64,
    pub svm: SvmResult,
    #[serde(skip)]
    pub points: Vec<PcaPoint>,
}

/// Projects question representations on their first two principal
/// components and fits a linear soft-margin SVM separating questions with
/// hypernym substitutions (slot "positive") from negative-sample ones.
pub fn separability_report(d: &EmbeddingDump, opts: SeparabilityOptions) -> Result<SeparabilityReport> {
    expect_role(d, DumpRole::QuestionFinal)?;
    let labels: Vec<f64> = d
        .manifest
        .row_meta
        .iter()
        .enumerate()
        .map(|(i, m)| match m.slot.as_deref() {
            Some("positive") => Ok(1.0),
            Some(s) if s.starts_with("neg") => Ok(-1.0),
            other => Err(AnalysisError::LabelMismatch(format!("row {i} has slot {other:?}"))),
        })
        .collect::<Result<_>>()?;
    let p = pca(&d.matrix, 2)?;
    let coords = p.project(&d.matrix)?;
    let svm = svm_fit_with(
        &coords,
        &labels,
        SvmOptions {
            c: opts.c,
            iterations: opts.iterations,
        },
    )?;
    let points = (0..coords.rows())
        .map(|i| PcaPoint {
            label: d.manifest.labels[i].clone(),
            class: if labels[i] > 0.0 { "hypernym" } else { "negative" }.into(),
            pc1: coords.get(i, 0),
            pc2: coords.get(i, 1),
        })
        .collect();
    Ok(SeparabilityReport {
        dump: d.into(),
        options: opts,
        n_hypernym: labels.iter().filter(|&&y| y > 0.0).count(),
        n_negative: labels.iter().filter(|&&y| y < 0.0).count(),
        explained_variance: p.explained_variance,
        total_variance: p.total_variance,
        svm,
        points,
    })
}
