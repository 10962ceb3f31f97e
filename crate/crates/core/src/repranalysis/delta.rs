use std::collections::BTreeSet;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};
use taxoprobe_stats::{cosine, paired_t_test, PairedTTest};

use super::{expect_role, AnalysisError, DumpRef, Result};
use crate::dump::{DumpRole, EmbeddingDump};
use crate::questgen::SkippedPair;
use crate::seed::rng_for;
use crate::taxonomy::Taxonomy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticDeltaOptions {
    pub negatives_per_pair: usize,
    pub seed: u64,
}

impl Default for StaticDeltaOptions {
    fn default() -> Self {
        Self {
            negatives_per_pair: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub hyponym: String,
    pub hypernym: String,
    /// Sampled negatives, joined with `;`.
    pub negatives: String,
    pub delta_a: f64,
    pub delta_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticDeltaReport {
    pub model_a: DumpRef,
    pub model_b: DumpRef,
    pub options: StaticDeltaOptions,
    pub n_pairs: usize,
    pub mean_delta_a: f64,
    pub mean_delta_b: f64,
    /// Paired over pairs, a minus b; absent with fewer than two pairs.
    pub t_test: Option<PairedTTest>,
    pub skipped: Vec<SkippedPair>,
    #[serde(skip)]
    pub rows: Vec<DeltaRow>,
}

fn vector<'a>(d: &'a EmbeddingDump, index: &std::collections::BTreeMap<&str, usize>, c: &str) -> Result<&'a [f64]> {
    index
        .get(c)
        .map(|&i| d.matrix.row(i))
        .ok_or_else(|| AnalysisError::MissingConcept {
            dump: d.name.clone(),
            concept: c.to_string(),
        })
}

/// cos(hyponym, hypernym) minus the mean cosine between the hyponym and
/// negatives standing in for the hypernym, for every stored pair. Both
/// models see the same negative draws.
pub fn static_delta_report(
    a: &EmbeddingDump,
    b: &EmbeddingDump,
    t: &Taxonomy,
    opts: StaticDeltaOptions,
) -> Result<StaticDeltaReport> {
    expect_role(a, DumpRole::Static)?;
    expect_role(b, DumpRole::Static)?;
    let (ia, ib) = (a.row_index(), b.row_index());
    let delta = |d: &EmbeddingDump, idx, hypo: &str, hyper: &str, negs: &[&str]| -> Result<f64> {
        let h = vector(d, idx, hypo)?;
        let pos = cosine(h, vector(d, idx, hyper)?);
        let mut neg = 0.0;
        for n in negs {
            neg += cosine(h, vector(d, idx, n)?);
        }
        Ok(pos - neg / negs.len() as f64)
    };
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (hypo, hyper) in t.hypernym_pairs() {
        let mut excluded: BTreeSet<&str> = t.hypernym_chain(&hypo)?.iter().map(String::as_str).collect();
        excluded.insert(&hypo);
        let pool = t.negative_pool(&excluded, std::iter::empty(), t.signature(&hyper)?);
        if pool.len() < opts.negatives_per_pair || opts.negatives_per_pair == 0 {
            skipped.push(SkippedPair {
                hyponym: hypo,
                hypernym: hyper,
                available: pool.len(),
            });
            continue;
        }
        let mut rng = rng_for(opts.seed, &format!("delta:{hypo}:{hyper}"));
        let negs: Vec<&str> = sample(&mut rng, pool.len(), opts.negatives_per_pair)
            .into_iter()
            .map(|i| pool[i])
            .collect();
        rows.push(DeltaRow {
            delta_a: delta(a, &ia, &hypo, &hyper, &negs)?,
            delta_b: delta(b, &ib, &hypo, &hyper, &negs)?,
            negatives: negs.join(";"),
            hyponym: hypo,
            hypernym: hyper,
        });
    }
    if rows.is_empty() {
        return Err(AnalysisError::Empty("no hyponym-hypernym pair had enough negatives".into()));
    }
    let xa: Vec<f64> = rows.iter().map(|r| r.delta_a).collect();
    let xb: Vec<f64> = rows.iter().map(|r| r.delta_b).collect();
    let n = rows.len() as f64;
    Ok(StaticDeltaReport {
        model_a: a.into(),
        model_b: b.into(),
        options: opts,
        n_pairs: rows.len(),
        mean_delta_a: xa.iter().sum::<f64>() / n,
        mean_delta_b: xb.iter().sum::<f64>() / n,
        t_test: if rows.len() >= 2 { Some(paired_t_test(&xa, &xb)?) } else { None },
        skipped,
        rows,
    })
}
