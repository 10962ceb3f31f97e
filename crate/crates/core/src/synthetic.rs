//! Seeded synthetic dumps and results with known structure, for smoke tests
//! of the analyses without model access.

use rand::Rng;
use rand_distr::StandardNormal;
use taxoprobe_stats::Matrix;

use crate::dump::{DumpManifest, DumpRole, RowMeta};
use crate::metrics::InstanceResult;
use crate::questgen::Gold;
use crate::seed::rng_for;
use crate::taxonomy::Taxonomy;

/// A dump that has not been written yet.
#[derive(Debug, Clone, PartialEq)]
pub struct DumpDraft {
    pub name: String,
    pub manifest: DumpManifest,
    pub matrix: Matrix,
}

fn normal_vec(rng: &mut impl Rng, n: usize, sd: f64) -> Vec<f64> {
    (0..n).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn matrix(rows: Vec<Vec<f64>>, labels: Vec<String>) -> Matrix {
    Matrix::from_rows(&rows)
        .and_then(|m| m.with_row_labels(labels))
        .expect("rows have equal length")
}

/// One row per taxonomy concept plus `extra` filler tokens. A concept's
/// vector sums independent directions for itself and each ancestor, so
/// concepts sharing hypernyms point the same way; `noise` adds isotropic
/// Gaussian noise of that standard deviation.
pub fn hierarchical_embeddings(t: &Taxonomy, dims: usize, extra: usize, noise: f64, seed: u64) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut rng = rng_for(seed, "synthetic:directions");
    let concepts = t.concepts();
    let directions: Vec<Vec<f64>> = concepts.iter().map(|_| normal_vec(&mut rng, dims, 1.0)).collect();
    let index = |c: &str| concepts.iter().position(|x| x == c).expect("known concept");
    let mut noise_rng = rng_for(seed, &format!("synthetic:noise:{noise}"));
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for (i, c) in concepts.iter().enumerate() {
        let mut v = directions[i].clone();
        for a in t.ancestors(c).expect("known concept") {
            for (x, d) in v.iter_mut().zip(&directions[index(a)]) {
                *x += d;
            }
        }
        for (x, e) in v.iter_mut().zip(normal_vec(&mut noise_rng, dims, noise)) {
            *x += e;
        }
        labels.push(c.clone());
        rows.push(v);
    }
    for k in 0..extra {
        labels.push(format!("<tok{k}>"));
        rows.push(normal_vec(&mut rng, dims, 1.0));
    }
    (labels, rows)
}

/// `Unembedding` dump of [`hierarchical_embeddings`].
pub fn unembedding_dump(name: &str, model: &str, t: &Taxonomy, dims: usize, noise: f64, seed: u64) -> DumpDraft {
    let (labels, rows) = hierarchical_embeddings(t, dims, dims, noise, seed);
    DumpDraft {
        name: name.into(),
        manifest: DumpManifest::new(model, DumpRole::Unembedding, labels.clone(), dims),
        matrix: matrix(rows, labels),
    }
}

/// `Static` dump with one row per concept; `structured` picks hierarchical
/// embeddings over unrelated random vectors.
pub fn static_dump(name: &str, model: &str, t: &Taxonomy, dims: usize, structured: bool, seed: u64) -> DumpDraft {
    let (labels, rows) = if structured {
        hierarchical_embeddings(t, dims, 0, 0.5, seed)
    } else {
        let mut rng = rng_for(seed, "synthetic:static");
        let labels = t.concepts().to_vec();
        let rows = labels.iter().map(|_| normal_vec(&mut rng, dims, 1.0)).collect();
        (labels, rows)
    };
    DumpDraft {
        name: name.into(),
        manifest: DumpManifest::new(model, DumpRole::Static, labels.clone(), dims),
        matrix: matrix(rows, labels),
    }
}

/// `QuestionFinal` dump with `n` "positive" rows and `n` negative rows drawn
/// from unit Gaussians whose means differ by `shift` along the first axis.
pub fn question_final_dump(name: &str, n: usize, dims: usize, shift: f64, seed: u64) -> DumpDraft {
    let mut rng = rng_for(seed, "synthetic:question_final");
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut meta = Vec::new();
    for i in 0..n {
        for (slot, offset) in [("positive", shift / 2.0), ("neg1", -shift / 2.0)] {
            let mut v = normal_vec(&mut rng, dims, 1.0);
            v[0] += offset;
            rows.push(v);
            labels.push(format!("q{i}:{slot}"));
            meta.push(RowMeta {
                instance_id: Some(format!("q{i}")),
                slot: Some(slot.into()),
                ..RowMeta::default()
            });
        }
    }
    let mut manifest = DumpManifest::new("synthetic", DumpRole::QuestionFinal, labels.clone(), dims);
    manifest.row_meta = meta;
    DumpDraft {
        name: name.into(),
        manifest,
        matrix: matrix(rows, labels),
    }
}

/// Layer-wise contextual dumps and matching results for the odds analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct OddsFixture {
    pub dumps: Vec<DumpDraft>,
    pub results: Vec<InstanceResult>,
    /// Hyponym-hypernym minus hyponym-negative similarity per substituted
    /// instance at `informative_layer`.
    pub deltas: Vec<f64>,
}

/// Unit vector with cosine `c` to the first axis, spread along `axis`.
fn at_cosine(c: f64, axis: usize, dims: usize) -> Vec<f64> {
    let mut v = vec![0.0; dims];
    v[0] = c;
    v[axis] = (1.0 - c * c).sqrt();
    v
}

/// `n` correct originals, each with one substituted child whose gold answer
/// is No. At `informative_layer` the child's hyponym-hypernym similarity
/// exceeds the best negative by a uniform delta in [-0.5, 0.5], and the
/// child is correct with probability `1 / (1 + exp(-slope * delta))`; other
/// layers carry unrelated deltas. `slope = None` makes correctness exactly
/// `delta > 0`.
pub fn odds_fixture(n: usize, n_layers: usize, informative_layer: usize, slope: Option<f64>, seed: u64) -> OddsFixture {
    assert!(informative_layer < n_layers);
    let dims = 8;
    let mut rng = rng_for(seed, "synthetic:odds");
    let layer_deltas: Vec<Vec<f64>> = (0..n_layers)
        .map(|_| (0..n).map(|_| rng.random_range(-0.5..0.5)).collect())
        .collect();
    let deltas = layer_deltas[informative_layer].clone();
    let mut results = Vec::new();
    for (i, &d) in deltas.iter().enumerate() {
        let correct = match slope {
            Some(s) => rng.random::<f64>() < 1.0 / (1.0 + (-s * d).exp()),
            None => d > 0.0,
        };
        let base = InstanceResult {
            instance_id: format!("s:{i}"),
            positive_correct: true,
            negatives_correct: vec![true; 4],
            substitution_depth: 0,
            source_leaf: format!("leaf{i}"),
            target: format!("leaf{i}"),
            positive_gold: Gold::No,
            parent_instance_id: None,
        };
        results.push(InstanceResult {
            instance_id: format!("s:{i}#1"),
            positive_correct: correct,
            substitution_depth: 1,
            target: format!("hyper{i}"),
            parent_instance_id: Some(base.instance_id.clone()),
            ..base.clone()
        });
        results.push(base);
    }

    let neg_cos = 0.3;
    let dumps = (0..n_layers)
        .map(|layer| {
            let mut rows = Vec::new();
            let mut labels = Vec::new();
            let mut meta = Vec::new();
            for (i, d) in layer_deltas[layer].iter().enumerate() {
                let id = format!("s:{i}#1");
                let mut push = |slot: &str, part: &str, concept: String, v: Vec<f64>| {
                    labels.push(format!("{id}:{slot}:{part}"));
                    meta.push(RowMeta {
                        instance_id: Some(id.clone()),
                        slot: Some(slot.into()),
                        part: Some(part.into()),
                        concept: Some(concept),
                        mention_index: Some(0),
                        ..RowMeta::default()
                    });
                    rows.push(v);
                };
                push("positive", "description", format!("leaf{i}"), at_cosine(1.0, 1, dims));
                push("positive", "question", format!("hyper{i}"), at_cosine(neg_cos + d, 1, dims));
                for k in 1..=4 {
                    push(&format!("neg{k}"), "question", format!("other{i}x{k}"), at_cosine(neg_cos, 1 + k, dims));
                }
            }
            let mut manifest = DumpManifest::new("synthetic-vlm", DumpRole::LayerwiseContextual, labels.clone(), dims);
            manifest.layer = Some(layer);
            manifest.n_layers = Some(n_layers);
            manifest.row_meta = meta;
            DumpDraft {
                name: format!("synthetic-vlm.layer{layer:02}"),
                manifest,
                matrix: matrix(rows, labels),
            }
        })
        .collect();
    OddsFixture { dumps, results, deltas }
}
