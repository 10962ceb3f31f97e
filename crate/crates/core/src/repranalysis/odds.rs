use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use taxoprobe_stats::special::normal_two_sided_p;
use taxoprobe_stats::{cosine, logistic_fit, Matrix, Z_95};

use super::{expect_role, AnalysisError, DumpRef, Result};
use crate::dump::{DumpRole, EmbeddingDump};
use crate::metrics::{judge_instance, InstanceResult};
use crate::questgen::Gold;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityFeatures {
    pub layer: usize,
    pub instance_id: String,
    pub sim_hyper: f64,
    pub sim_neg_max: f64,
    pub delta: f64,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerOdds {
    pub layer: usize,
    pub n: usize,
    pub n_correct: usize,
    pub coefficient: f64,
    pub standard_error: f64,
    pub odds_ratio: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Wald test of the delta coefficient.
    pub p: f64,
    /// Likelihood-ratio test against the intercept-only model; stays
    /// meaningful under separation, where the Wald test does not.
    pub lr_p: f64,
    pub converged: bool,
    pub separation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerwiseOddsReport {
    pub dumps: Vec<DumpRef>,
    pub n_selected: usize,
    /// Selected instances with no rows in the dumps.
    pub n_missing: usize,
    pub layers: Vec<LayerOdds>,
    #[serde(skip)]
    pub features: Vec<SimilarityFeatures>,
}

/// Substituted instances whose positive gold answer is No and whose
/// original was judged correct, paired with their own judgment.
pub fn analysis_subset(results: &[InstanceResult]) -> Vec<(&InstanceResult, bool)> {
    let correct_originals: BTreeSet<&str> = results
        .iter()
        .filter(|r| r.parent_instance_id.is_none() && judge_instance(r) == 1)
        .map(|r| r.instance_id.as_str())
        .collect();
    let mut out: Vec<(&InstanceResult, bool)> = results
        .iter()
        .filter(|r| r.positive_gold == Gold::No)
        .filter(|r| {
            r.parent_instance_id
                .as_deref()
                .is_some_and(|p| correct_originals.contains(p))
        })
        .map(|r| (r, judge_instance(r) == 1))
        .collect();
    out.sort_by(|a, b| a.0.instance_id.cmp(&b.0.instance_id));
    out
}

#[derive(Default)]
struct Mentions {
    hypo: Vec<usize>,
    hyper: Vec<usize>,
    negs: Vec<usize>,
}

fn index_rows(d: &EmbeddingDump) -> BTreeMap<&str, Mentions> {
    let mut out: BTreeMap<&str, Mentions> = BTreeMap::new();
    for (i, m) in d.manifest.row_meta.iter().enumerate() {
        let (Some(id), Some(slot), Some(part)) = (&m.instance_id, &m.slot, &m.part) else {
            continue;
        };
        let e = out.entry(id.as_str()).or_default();
        match (slot.as_str(), part.as_str()) {
            ("positive", "description") => e.hypo.push(i),
            ("positive", "question") => e.hyper.push(i),
            (s, "question") if s.starts_with("neg") => e.negs.push(i),
            _ => {}
        }
    }
    out
}

fn max_cos(m: &Matrix, a: &[usize], b: &[usize]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for &i in a {
        for &j in b {
            best = best.max(cosine(m.row(i), m.row(j)));
        }
    }
    best
}

fn check_layers(dumps: &[EmbeddingDump]) -> Result<Vec<usize>> {
    if dumps.is_empty() {
        return Err(AnalysisError::LayerMismatch("no layer dumps".into()));
    }
    let mut layers = Vec::new();
    let n_layers = dumps[0].manifest.n_layers;
    let model = &dumps[0].manifest.model_id;
    for d in dumps {
        expect_role(d, DumpRole::LayerwiseContextual)?;
        if d.manifest.n_layers != n_layers {
            return Err(AnalysisError::LayerMismatch(format!(
                "`{}` declares {:?} layers, `{}` declares {:?}",
                d.name, d.manifest.n_layers, dumps[0].name, n_layers
            )));
        }
        if &d.manifest.model_id != model {
            return Err(AnalysisError::LayerMismatch(format!("`{}` comes from a different model", d.name)));
        }
        layers.push(d.manifest.layer.unwrap_or(usize::MAX));
    }
    let mut sorted = layers.clone();
    sorted.sort_unstable();
    let expected: Vec<usize> = (0..n_layers.unwrap_or(0)).collect();
    if sorted != expected {
        return Err(AnalysisError::LayerMismatch(format!(
            "layers {sorted:?} do not cover 0..{}",
            n_layers.unwrap_or(0)
        )));
    }
    Ok(layers)
}

fn layer_features(d: &EmbeddingDump, layer: usize, subset: &[(&InstanceResult, bool)]) -> Result<(Vec<SimilarityFeatures>, usize)> {
    let rows = index_rows(d);
    let mut out = Vec::new();
    let mut missing = 0;
    for (r, correct) in subset {
        let Some(m) = rows.get(r.instance_id.as_str()) else {
            missing += 1;
            continue;
        };
        if m.hypo.is_empty() || m.hyper.is_empty() || m.negs.is_empty() {
            return Err(AnalysisError::Span(format!(
                "`{}` in `{}`: {} hyponym, {} hypernym, {} negative rows",
                r.instance_id,
                d.name,
                m.hypo.len(),
                m.hyper.len(),
                m.negs.len()
            )));
        }
        let sim_hyper = max_cos(&d.matrix, &m.hypo, &m.hyper);
        let sim_neg_max = max_cos(&d.matrix, &m.hypo, &m.negs);
        out.push(SimilarityFeatures {
            layer,
            instance_id: r.instance_id.clone(),
            sim_hyper,
            sim_neg_max,
            delta: sim_hyper - sim_neg_max,
            correct: *correct,
        });
    }
    Ok((out, missing))
}

fn fit_layer(layer: usize, features: &[SimilarityFeatures]) -> Result<LayerOdds> {
    let x = Matrix::new(features.len(), 1, features.iter().map(|f| f.delta).collect())?;
    let y: Vec<bool> = features.iter().map(|f| f.correct).collect();
    let fit = logistic_fit(&x, &y)?;
    let n = y.len() as f64;
    let k = y.iter().filter(|&&c| c).count();
    let p_hat = k as f64 / n;
    let ll_null = k as f64 * p_hat.ln() + (n - k as f64) * (1.0 - p_hat).ln();
    let lr = (2.0 * (fit.log_likelihood - ll_null)).max(0.0);
    let (ci_low, ci_high) = fit.odds_ratio_ci(1, Z_95);
    Ok(LayerOdds {
        layer,
        n: y.len(),
        n_correct: k,
        coefficient: fit.coefficients[1],
        standard_error: fit.standard_errors[1],
        odds_ratio: fit.coefficients[1].exp(),
        ci_low,
        ci_high,
        p: fit.p_values[1],
        lr_p: normal_two_sided_p(lr.sqrt()),
        converged: fit.converged,
        separation: fit.separation,
    })
}

/// Per layer, regresses instance correctness on the contextual similarity
/// margin between hyponym-hypernym and hyponym-negative mentions.
pub fn layerwise_odds_report(dumps: &[EmbeddingDump], results: &[InstanceResult]) -> Result<LayerwiseOddsReport> {
    let layers = check_layers(dumps)?;
    let subset = analysis_subset(results);
    if subset.is_empty() {
        return Err(AnalysisError::Empty("no substituted No-gold instances with a correct original".into()));
    }
    let per_layer: Vec<(Vec<SimilarityFeatures>, usize)> = dumps
        .par_iter()
        .zip(&layers)
        .map(|(d, &l)| layer_features(d, l, &subset))
        .collect::<Result<_>>()?;
    let mut order: Vec<usize> = (0..dumps.len()).collect();
    order.sort_by_key(|&i| layers[i]);
    let fits: Vec<LayerOdds> = order
        .par_iter()
        .map(|&i| fit_layer(layers[i], &per_layer[i].0))
        .collect::<Result<_>>()?;
    let n_missing = per_layer.iter().map(|p| p.1).max().unwrap_or(0);
    let mut features: Vec<SimilarityFeatures> = order.iter().flat_map(|&i| per_layer[i].0.clone()).collect();
    features.sort_by(|a, b| (a.layer, &a.instance_id).cmp(&(b.layer, &b.instance_id)));
    Ok(LayerwiseOddsReport {
        dumps: order.iter().map(|&i| (&dumps[i]).into()).collect(),
        n_selected: subset.len(),
        n_missing,
        layers: fits,
        features,
    })
}
