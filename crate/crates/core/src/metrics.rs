//! Instance judgments and the three dataset-level accuracy measures.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::questgen::{Gold, NEGATIVES_PER_QUESTION};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no instances")]
    Empty,
    #[error("`{child}` names parent `{parent}`, which is not an original instance")]
    DanglingParent { child: String, parent: String },
    #[error("`{0}` has {1} negative judgments, expected 4")]
    NegativeCount(String, usize),
    #[error("duplicate instance id `{0}`")]
    Duplicate(String),
}

type Result<T, E = MetricsError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub instance_id: String,
    pub positive_correct: bool,
    pub negatives_correct: Vec<bool>,
    pub substitution_depth: usize,
    pub source_leaf: String,
    /// Concept asked about at this depth (the leaf itself at depth 0).
    pub target: String,
    pub positive_gold: Gold,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_instance_id: Option<String>,
}

/// 1 iff the positive and all four negative questions were answered correctly.
pub fn judge_instance(r: &InstanceResult) -> u8 {
    u8::from(r.positive_correct && r.negatives_correct.iter().all(|&c| c))
}

fn correct(r: &InstanceResult) -> bool {
    judge_instance(r) == 1
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSet {
    /// Depth-0 results, sorted by id.
    pub originals: Vec<InstanceResult>,
    /// Substituted results per original id, sorted by depth then id.
    pub substituted: BTreeMap<String, Vec<InstanceResult>>,
}

impl InstanceSet {
    /// Splits results into originals and their substitutions. Results with
    /// a parent id are substitutions; all others are originals.
    pub fn from_results(results: impl IntoIterator<Item = InstanceResult>) -> Result<Self> {
        let mut originals = Vec::new();
        let mut children = Vec::new();
        let mut ids = BTreeSet::new();
        for r in results {
            if r.negatives_correct.len() != NEGATIVES_PER_QUESTION {
                return Err(MetricsError::NegativeCount(r.instance_id, r.negatives_correct.len()));
            }
            if !ids.insert(r.instance_id.clone()) {
                return Err(MetricsError::Duplicate(r.instance_id));
            }
            if r.parent_instance_id.is_some() {
                children.push(r);
            } else {
                originals.push(r);
            }
        }
        originals.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
        let mut substituted: BTreeMap<String, Vec<InstanceResult>> =
            originals.iter().map(|o| (o.instance_id.clone(), Vec::new())).collect();
        for c in children {
            let parent = c.parent_instance_id.clone().unwrap_or_default();
            match substituted.get_mut(&parent) {
                Some(v) => v.push(c),
                None => {
                    return Err(MetricsError::DanglingParent {
                        child: c.instance_id,
                        parent,
                    })
                }
            }
        }
        for v in substituted.values_mut() {
            v.sort_by(|a, b| {
                (a.substitution_depth, &a.instance_id).cmp(&(b.substitution_depth, &b.instance_id))
            });
        }
        Ok(Self {
            originals,
            substituted,
        })
    }

    pub fn n(&self) -> usize {
        self.originals.len()
    }

    fn children(&self, original: &InstanceResult) -> &[InstanceResult] {
        self.substituted
            .get(&original.instance_id)
            .map_or(&[], Vec::as_slice)
    }

    pub fn n_substituted(&self) -> usize {
        self.substituted.values().map(Vec::len).sum()
    }

    pub fn iter_all(&self) -> impl Iterator<Item = &InstanceResult> + '_ {
        self.originals.iter().chain(self.substituted.values().flatten())
    }
}

/// Numerator / denominator pair; tallies from partitions add up.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub hits: usize,
    pub total: usize,
}

impl Tally {
    pub fn add(&mut self, hit: bool) {
        self.hits += usize::from(hit);
        self.total += 1;
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            hits: self.hits + other.hits,
            total: self.total + other.total,
        }
    }

    pub fn ratio(self) -> Option<f64> {
        (self.total > 0).then(|| self.hits as f64 / self.total as f64)
    }
}

pub fn overall_tally(s: &InstanceSet) -> Tally {
    let mut t = Tally::default();
    for r in s.iter_all() {
        t.add(correct(r));
    }
    t
}

/// Over originals judged correct, the substituted instances judged correct.
pub fn conditional_tally(s: &InstanceSet) -> Tally {
    let mut t = Tally::default();
    for o in s.originals.iter().filter(|o| correct(o)) {
        for c in s.children(o) {
            t.add(correct(c));
        }
    }
    t
}

pub fn hierarchical_tally(s: &InstanceSet) -> Tally {
    let mut t = Tally::default();
    for o in &s.originals {
        t.add(correct(o) && s.children(o).iter().all(correct));
    }
    t
}

/// Correct instances over all instances, originals and substitutions alike.
pub fn overall_accuracy(s: &InstanceSet) -> Result<f64> {
    overall_tally(s).ratio().ok_or(MetricsError::Empty)
}

/// `None` when no correctly answered original has substitutions.
pub fn conditional_accuracy(s: &InstanceSet) -> Option<f64> {
    conditional_tally(s).ratio()
}

/// Fraction of originals answered correctly together with every one of
/// their substitutions.
pub fn hierarchical_consistency(s: &InstanceSet) -> Result<f64> {
    hierarchical_tally(s).ratio().ok_or(MetricsError::Empty)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub overall: f64,
    pub conditional: Option<f64>,
    pub hierarchical_consistency: f64,
    pub n_originals: usize,
    pub n_substituted: usize,
    /// Originals judged correct that have at least one substitution.
    pub n_conditioned: usize,
}

pub fn metrics_report(s: &InstanceSet) -> Result<MetricsReport> {
    Ok(MetricsReport {
        overall: overall_accuracy(s)?,
        conditional: conditional_accuracy(s),
        hierarchical_consistency: hierarchical_consistency(s)?,
        n_originals: s.n(),
        n_substituted: s.n_substituted(),
        n_conditioned: s
            .originals
            .iter()
            .filter(|o| correct(o) && !s.children(o).is_empty())
            .count(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthRow {
    pub depth: usize,
    pub n: usize,
    pub accuracy: f64,
    /// Accuracy at this depth among substitutions of correct originals.
    pub conditional: Option<f64>,
}

pub fn by_depth(s: &InstanceSet) -> Vec<DepthRow> {
    let mut all: BTreeMap<usize, Tally> = BTreeMap::new();
    let mut cond: BTreeMap<usize, Tally> = BTreeMap::new();
    for r in s.iter_all() {
        all.entry(r.substitution_depth).or_default().add(correct(r));
    }
    for o in s.originals.iter().filter(|o| correct(o)) {
        for c in s.children(o) {
            cond.entry(c.substitution_depth).or_default().add(correct(c));
        }
    }
    all.into_iter()
        .map(|(depth, t)| DepthRow {
            depth,
            n: t.total,
            accuracy: t.ratio().unwrap_or(0.0),
            conditional: cond.get(&depth).and_then(|c| c.ratio()),
        })
        .collect()
}

/// Conditional accuracy per (hyponym, hypernym) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub hyponym: String,
    pub hypernym: String,
    pub n_conditioned: usize,
    pub conditional: f64,
}

pub fn by_pair(s: &InstanceSet) -> Vec<PairRow> {
    let mut pairs: BTreeMap<(String, String), Tally> = BTreeMap::new();
    for o in s.originals.iter().filter(|o| correct(o)) {
        for c in s.children(o) {
            pairs
                .entry((c.source_leaf.clone(), c.target.clone()))
                .or_default()
                .add(correct(c));
        }
    }
    pairs
        .into_iter()
        .filter_map(|((hyponym, hypernym), t)| {
            Some(PairRow {
                hyponym,
                hypernym,
                n_conditioned: t.total,
                conditional: t.ratio()?,
            })
        })
        .collect()
}

/// Conditional accuracy per hypernym, pooled over hyponyms.
pub fn by_hypernym(s: &InstanceSet) -> Vec<(String, Tally)> {
    let mut out: BTreeMap<String, Tally> = BTreeMap::new();
    for o in s.originals.iter().filter(|o| correct(o)) {
        for c in s.children(o) {
            out.entry(c.target.clone()).or_default().add(correct(c));
        }
    }
    out.into_iter().collect()
}
