//! Scene graphs plus taxonomy to a balanced, substituted QA dataset.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::questgen::{balance_sample, scene_instances, substitute_hypernyms, QAInstance, QuestgenError, QuestionKind};
use crate::scene::{filter_scene, render_description, FilterReason, SceneGraph, DEFAULT_MAX_OBJECTS, TEMPLATE_VERSION};
use crate::taxonomy::Taxonomy;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildConfig {
    pub max_objects: usize,
    pub per_scene_quota: usize,
    pub dataset_seed: u64,
    pub negative_seed: u64,
    /// Draw fresh negatives at every substitution depth.
    pub resample_negatives_per_depth: bool,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            max_objects: DEFAULT_MAX_OBJECTS,
            per_scene_quota: 40,
            dataset_seed: 0,
            negative_seed: 0,
            resample_negatives_per_depth: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildManifest {
    pub template_version: String,
    pub config: BuildConfig,
    pub n_scenes: usize,
    pub n_scenes_accepted: usize,
    pub scene_rejections: BTreeMap<FilterReason, usize>,
    pub question_rejections: BTreeMap<FilterReason, usize>,
    pub objects_outside_taxonomy: usize,
    pub discarded_insufficient_negatives: usize,
    pub discarded_substitutions: usize,
    /// Depth-0 candidates before per-scene balancing.
    pub n_candidates: usize,
    pub n_positive: usize,
    pub n_leaf: usize,
    pub n_substituted: usize,
    pub n_negative: usize,
    pub n_total: usize,
    pub by_depth: BTreeMap<usize, usize>,
    pub by_qtype: BTreeMap<QuestionKind, usize>,
    pub n_hypernym_chains: usize,
    pub n_pairs: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildOutput {
    pub instances: Vec<QAInstance>,
    pub manifest: BuildManifest,
}

struct SceneOutcome {
    rejected: Option<FilterReason>,
    question_rejections: BTreeMap<FilterReason, usize>,
    outside: usize,
    insufficient: usize,
    dropped_subs: usize,
    candidates: usize,
    instances: Vec<QAInstance>,
}

fn build_scene(s: &SceneGraph, t: &Taxonomy, cfg: &BuildConfig) -> Result<SceneOutcome, QuestgenError> {
    let verdict = filter_scene(s, cfg.max_objects);
    if !verdict.accepted {
        return Ok(SceneOutcome {
            rejected: Some(verdict.reason),
            question_rejections: BTreeMap::new(),
            outside: 0,
            insufficient: 0,
            dropped_subs: 0,
            candidates: 0,
            instances: Vec::new(),
        });
    }
    let description = render_description(s, cfg.dataset_seed);
    let (originals, stats) = scene_instances(s, &description, t, cfg.dataset_seed, cfg.negative_seed)?;
    let candidates = originals.len();
    let per_scene: BTreeMap<String, Vec<QAInstance>> = [(s.scene_id.clone(), originals)].into();
    let kept = balance_sample(&per_scene, cfg.per_scene_quota, cfg.dataset_seed);
    let concepts = s.concepts();
    let mut instances = Vec::new();
    let mut dropped_subs = 0;
    for inst in kept {
        let subs = substitute_hypernyms(&inst, t, &concepts, cfg.negative_seed, cfg.resample_negatives_per_depth)?;
        dropped_subs += t.hypernym_chain(&inst.source_leaf)?.len() - subs.len();
        instances.push(inst);
        instances.extend(subs);
    }
    Ok(SceneOutcome {
        rejected: None,
        question_rejections: stats.question_rejections,
        outside: stats.objects_outside_taxonomy,
        insufficient: stats.insufficient_negatives,
        dropped_subs,
        candidates,
        instances,
    })
}

/// Filters, renders, instantiates, balances and substitutes every scene.
/// Scenes are processed in parallel; the output depends only on the inputs.
pub fn build_dataset(scenes: &[SceneGraph], t: &Taxonomy, cfg: &BuildConfig) -> Result<BuildOutput, QuestgenError> {
    let mut sorted: Vec<&SceneGraph> = scenes.iter().collect();
    sorted.sort_by(|a, b| a.scene_id.cmp(&b.scene_id));
    let outcomes: Vec<SceneOutcome> = sorted
        .par_iter()
        .map(|s| build_scene(s, t, cfg))
        .collect::<Result<_, _>>()?;

    let mut m = BuildManifest {
        template_version: TEMPLATE_VERSION.into(),
        config: cfg.clone(),
        n_scenes: scenes.len(),
        ..BuildManifest::default()
    };
    let mut instances = Vec::new();
    for o in outcomes {
        match o.rejected {
            Some(reason) => *m.scene_rejections.entry(reason).or_default() += 1,
            None => m.n_scenes_accepted += 1,
        }
        for (reason, n) in o.question_rejections {
            *m.question_rejections.entry(reason).or_default() += n;
        }
        m.objects_outside_taxonomy += o.outside;
        m.discarded_insufficient_negatives += o.insufficient;
        m.discarded_substitutions += o.dropped_subs;
        m.n_candidates += o.candidates;
        instances.extend(o.instances);
    }

    let mut chains: BTreeSet<Vec<String>> = BTreeSet::new();
    let mut pairs: BTreeSet<(&str, &str)> = BTreeSet::new();
    for inst in &instances {
        m.n_positive += 1;
        *m.by_depth.entry(inst.substitution_depth).or_default() += 1;
        *m.by_qtype.entry(inst.positive.qtype).or_default() += 1;
        if inst.substitution_depth == 0 {
            m.n_leaf += 1;
            if let Ok(c) = t.hypernym_chain(&inst.source_leaf) {
                if !c.is_empty() {
                    chains.insert(c.to_vec());
                }
            }
        } else {
            m.n_substituted += 1;
            pairs.insert((&inst.source_leaf, &inst.positive.target));
        }
        m.n_negative += inst.negatives.len();
    }
    m.n_total = m.n_positive + m.n_negative;
    m.n_hypernym_chains = chains.len();
    m.n_pairs = pairs.len();
    Ok(BuildOutput { instances, manifest: m })
}
