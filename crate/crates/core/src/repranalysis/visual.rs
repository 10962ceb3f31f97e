use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use taxoprobe_stats::{cosine, grouped_regression, GroupedRecord, GroupedRegression};

use super::{expect_role, AnalysisError, DumpRef, Result};
use crate::dump::{DumpRole, EmbeddingDump};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisualOptions {
    /// Leave the hyponym's own images out of its hypernym's prototype.
    pub exclude_leaf: bool,
}

impl Default for VisualOptions {
    fn default() -> Self {
        Self { exclude_leaf: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualSimilarityRecord {
    pub hyponym: String,
    pub hypernym: String,
    pub viz_sim: f64,
    pub cond_acc: f64,
    pub n_leaf_images: usize,
    pub n_prototype_images: usize,
    #[serde(skip)]
    pub prototype_rows: Vec<usize>,
    #[serde(skip)]
    pub leaf_rows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedVisualPair {
    pub hyponym: String,
    pub hypernym: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohesionRow {
    pub hypernym: String,
    pub n_pairs: usize,
    pub cohesion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualReport {
    pub dump: DumpRef,
    pub options: VisualOptions,
    pub median_viz_sim: f64,
    pub regression: Option<GroupedRegression>,
    /// Why `regression` is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regression_note: Option<String>,
    pub cohesion: Vec<CohesionRow>,
    pub skipped: Vec<SkippedVisualPair>,
    pub records: Vec<VisualSimilarityRecord>,
}

/// Median; mean of the two middle values for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 0 { (v[m - 1] + v[m]) / 2.0 } else { v[m] })
}

/// Share of `hypernym`'s pairs whose similarity is strictly above the
/// median over all pairs.
pub fn cohesion(pair_sims: &BTreeMap<(String, String), f64>, hypernym: &str) -> Result<f64> {
    let all: Vec<f64> = pair_sims.values().copied().collect();
    let med = median(&all).ok_or_else(|| AnalysisError::NoPairs(hypernym.to_string()))?;
    let mine: Vec<f64> = pair_sims
        .iter()
        .filter(|((_, h), _)| h == hypernym)
        .map(|(_, &v)| v)
        .collect();
    if mine.is_empty() {
        return Err(AnalysisError::NoPairs(hypernym.to_string()));
    }
    Ok(mine.iter().filter(|&&v| v > med).count() as f64 / mine.len() as f64)
}

fn mean_row(d: &EmbeddingDump, rows: &[usize]) -> Vec<f64> {
    let mut acc = vec![0.0; d.matrix.cols()];
    for &r in rows {
        for (a, v) in acc.iter_mut().zip(d.matrix.row(r)) {
            *a += v;
        }
    }
    let n = rows.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

/// Similarity of each hyponym's images to the prototype of its hypernym's
/// other members, its regression against conditional accuracy grouped by
/// hypernym, and per-hypernym cohesion.
pub fn visual_similarity_report(
    d: &EmbeddingDump,
    membership: &BTreeMap<String, Vec<String>>,
    cond_acc: &BTreeMap<(String, String), f64>,
    opts: VisualOptions,
) -> Result<VisualReport> {
    expect_role(d, DumpRole::VisionPatch)?;
    let mut by_concept: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, m) in d.manifest.row_meta.iter().enumerate() {
        if let Some(c) = &m.concept {
            by_concept.entry(c.as_str()).or_default().push(i);
        }
    }
    let image_of = |i: usize| d.manifest.row_meta[i].image_id.as_deref();

    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for ((hypo, hyper), &acc) in cond_acc {
        let skip = |reason: &str| SkippedVisualPair {
            hyponym: hypo.clone(),
            hypernym: hyper.clone(),
            reason: reason.to_string(),
        };
        let Some(members) = membership.get(hyper) else {
            skipped.push(skip("hypernym has no membership entry"));
            continue;
        };
        let leaf_rows = by_concept.get(hypo.as_str()).cloned().unwrap_or_default();
        if leaf_rows.is_empty() {
            skipped.push(skip("no images for the hyponym"));
            continue;
        }
        let leaf_images: BTreeSet<&str> = leaf_rows.iter().filter_map(|&i| image_of(i)).collect();
        let mut proto_rows: Vec<usize> = members
            .iter()
            .filter(|m| !(opts.exclude_leaf && *m == hypo))
            .flat_map(|m| by_concept.get(m.as_str()).cloned().unwrap_or_default())
            .filter(|&i| !(opts.exclude_leaf && image_of(i).is_some_and(|img| leaf_images.contains(img))))
            .collect();
        proto_rows.sort_unstable();
        proto_rows.dedup();
        if proto_rows.is_empty() {
            tracing::warn!(%hypo, %hyper, "empty prototype; pair skipped");
            skipped.push(skip("empty prototype"));
            continue;
        }
        let proto = mean_row(d, &proto_rows);
        let viz_sim = leaf_rows.iter().map(|&i| cosine(d.matrix.row(i), &proto)).sum::<f64>() / leaf_rows.len() as f64;
        records.push(VisualSimilarityRecord {
            hyponym: hypo.clone(),
            hypernym: hyper.clone(),
            viz_sim,
            cond_acc: acc,
            n_leaf_images: leaf_rows.len(),
            n_prototype_images: proto_rows.len(),
            prototype_rows: proto_rows,
            leaf_rows,
        });
    }
    if records.is_empty() {
        return Err(AnalysisError::Empty("no pair had both leaf and prototype images".into()));
    }

    let sims: BTreeMap<(String, String), f64> = records
        .iter()
        .map(|r| ((r.hyponym.clone(), r.hypernym.clone()), r.viz_sim))
        .collect();
    let hypernyms: BTreeSet<&str> = records.iter().map(|r| r.hypernym.as_str()).collect();
    let cohesion_rows = hypernyms
        .into_iter()
        .map(|h| {
            Ok(CohesionRow {
                hypernym: h.to_string(),
                n_pairs: records.iter().filter(|r| r.hypernym == h).count(),
                cohesion: cohesion(&sims, h)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let grouped: Vec<GroupedRecord> = records
        .iter()
        .map(|r| GroupedRecord::new(r.hypernym.clone(), r.viz_sim, r.cond_acc))
        .collect();
    let (regression, regression_note) = match grouped_regression(&grouped) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let all: Vec<f64> = sims.values().copied().collect();
    Ok(VisualReport {
        dump: d.into(),
        options: opts,
        median_viz_sim: median(&all).unwrap_or(f64::NAN),
        regression,
        regression_note,
        cohesion: cohesion_rows,
        skipped,
        records,
    })
}
