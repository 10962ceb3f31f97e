//! Question templates, hypernym substitution, negative sampling, per-scene
//! balancing and the taxonomy-only "is a" probe set.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::{self, classify, material_adjective, material_noun, pluralize, with_article, AttributeClass};
use crate::scene::{filter_question, FilterReason, QuestionAnnotation, SceneGraph, SceneObject};
use crate::seed::{derive_seed, rng_for};
use crate::taxonomy::{Taxonomy, TaxonomyError};

pub const NEGATIVES_PER_QUESTION: usize = 4;

#[derive(Debug, Error)]
pub enum QuestgenError {
    #[error("question type {0} needs an attribute")]
    MissingAttribute(QuestionKind),
    #[error("question type {0} takes no attribute")]
    UnexpectedAttribute(QuestionKind),
    #[error("`{0}` is not a material")]
    NotAMaterial(String),
    #[error("question type {0} cannot be instantiated from a scene object")]
    UnsupportedType(QuestionKind),
    #[error("only {available} negative candidates for `{target}`, need {needed}")]
    InsufficientCandidates {
        target: String,
        available: usize,
        needed: usize,
    },
    #[error(transparent)]
    Taxonomy(#[from] TaxonomyError),
}

type Result<T, E = QuestgenError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum QuestionKind {
    Exist,
    ExistAttr,
    ExistAttrNot,
    ExistAttrC,
    ExistAttrNotC,
    ExistThat,
    ExistThatNot,
    ExistThatC,
    ExistThatNotC,
    ExistMaterial,
    ExistMaterialNot,
    ExistMaterialC,
    ExistMaterialNotC,
    /// "Is it true that a C1 is a C2?"
    IsA,
}

impl QuestionKind {
    pub const SCENE_TYPES: [QuestionKind; 13] = [
        Self::Exist,
        Self::ExistAttr,
        Self::ExistAttrNot,
        Self::ExistAttrC,
        Self::ExistAttrNotC,
        Self::ExistThat,
        Self::ExistThatNot,
        Self::ExistThatC,
        Self::ExistThatNotC,
        Self::ExistMaterial,
        Self::ExistMaterialNot,
        Self::ExistMaterialC,
        Self::ExistMaterialNotC,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Exist => "exist",
            Self::ExistAttr => "existAttr",
            Self::ExistAttrNot => "existAttrNot",
            Self::ExistAttrC => "existAttrC",
            Self::ExistAttrNotC => "existAttrNotC",
            Self::ExistThat => "existThat",
            Self::ExistThatNot => "existThatNot",
            Self::ExistThatC => "existThatC",
            Self::ExistThatNotC => "existThatNotC",
            Self::ExistMaterial => "existMaterial",
            Self::ExistMaterialNot => "existMaterialNot",
            Self::ExistMaterialC => "existMaterialC",
            Self::ExistMaterialNotC => "existMaterialNotC",
            Self::IsA => "isA",
        }
    }

    /// Attribute class the type asks about, if any.
    pub fn attribute_class(self) -> Option<AttributeClass> {
        match self {
            Self::Exist | Self::IsA => None,
            Self::ExistAttr | Self::ExistAttrNot | Self::ExistAttrC | Self::ExistAttrNotC => Some(AttributeClass::Color),
            Self::ExistThat | Self::ExistThatNot | Self::ExistThatC | Self::ExistThatNotC => Some(AttributeClass::State),
            _ => Some(AttributeClass::Material),
        }
    }

    pub fn is_counterfactual(self) -> bool {
        self.name().ends_with('C')
    }

    fn is_negated(self) -> bool {
        self.name().contains("Not")
    }

    /// Whether the question's attribute must be one the target holds for
    /// the positive gold answer to come out right.
    pub fn uses_held_attribute(self) -> bool {
        self.is_negated() == self.is_counterfactual()
    }

    /// Gold answer of the positive question.
    pub fn gold(self) -> Gold {
        if self.is_counterfactual() {
            Gold::No
        } else {
            Gold::Yes
        }
    }
}

impl std::fmt::Display for QuestionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Gold {
    Yes,
    No,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub qtype: QuestionKind,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute: Option<String>,
    pub text: String,
    pub gold: Gold,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAInstance {
    pub instance_id: String,
    pub scene_id: String,
    pub description: String,
    pub positive: Question,
    pub negatives: Vec<Question>,
    pub substitution_depth: usize,
    pub source_leaf: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_instance_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
}

fn surface(concept: &str) -> String {
    concept.replace('_', " ")
}

/// Question text for a scene question type about `target`.
pub fn question_text(qtype: QuestionKind, target: &str, attribute: Option<&str>) -> Result<String> {
    let sg = surface(target);
    let pl = pluralize(&sg);
    let a_sg = with_article(&sg);
    let attr = || attribute.ok_or(QuestgenError::MissingAttribute(qtype));
    let material = || -> Result<&'static str> {
        let a = attr()?;
        material_noun(a).ok_or_else(|| QuestgenError::NotAMaterial(a.to_string()))
    };
    if qtype == QuestionKind::Exist && attribute.is_some() {
        return Err(QuestgenError::UnexpectedAttribute(qtype));
    }
    use QuestionKind::*;
    Ok(match qtype {
        Exist => format!("Are there any {pl}?"),
        ExistAttr => format!("Are there any {pl} that are {}?", attr()?),
        ExistAttrNot => format!("Are there {pl} in this scene that are not {}?", attr()?),
        ExistAttrC => format!("Do you see {pl} that are {}?", attr()?),
        ExistAttrNotC => format!("Do you see {a_sg} that is not {}?", attr()?),
        ExistThat => format!("Are there any {pl} in the picture that are {}?", attr()?),
        ExistThatNot | ExistThatNotC => format!("Is there {a_sg} in the image that is not {}?", attr()?),
        ExistThatC => format!("Is there {a_sg} that is {}?", attr()?),
        ExistMaterial => format!("Do you see {a_sg} that is made of {}?", material()?),
        ExistMaterialNot => format!("Is there {a_sg} that is not made of {}?", material()?),
        ExistMaterialC => {
            let a = attr()?;
            let adj = material_adjective(a).ok_or_else(|| QuestgenError::NotAMaterial(a.to_string()))?;
            format!("Are there any {adj} {pl}?")
        }
        ExistMaterialNotC => format!("Are there {pl} that are not made of {}?", material()?),
        IsA => return Err(QuestgenError::UnsupportedType(qtype)),
    })
}

/// Positive question of type `qtype` about a scene object.
pub fn instantiate_question(qtype: QuestionKind, object: &SceneObject, attribute: Option<&str>) -> Result<Question> {
    instantiate_for_target(qtype, &object.name, attribute)
}

fn instantiate_for_target(qtype: QuestionKind, target: &str, attribute: Option<&str>) -> Result<Question> {
    if qtype.attribute_class().is_none() && attribute.is_some() {
        return Err(QuestgenError::UnexpectedAttribute(qtype));
    }
    Ok(Question {
        qtype,
        target: target.to_string(),
        attribute: attribute.map(str::to_string),
        text: question_text(qtype, target, attribute)?,
        gold: qtype.gold(),
    })
}

pub fn taxomps_text(hyponym: &str, hypernym: &str) -> String {
    format!(
        "Is it true that {} is {}?",
        with_article(&surface(hyponym)),
        with_article(&surface(hypernym))
    )
}

/// Tags a negative candidate's signature must cover.
pub fn required_tags(q: &Question) -> BTreeSet<String> {
    match (q.attribute.as_ref(), q.qtype.attribute_class()) {
        (Some(_), Some(class)) => [class.tag().to_string()].into(),
        _ => BTreeSet::new(),
    }
}

/// Same question with the target replaced; gold becomes No.
fn negative_of(q: &Question, target: &str, subject: Option<&str>) -> Result<Question> {
    let text = match (q.qtype, subject) {
        (QuestionKind::IsA, Some(hypo)) => taxomps_text(hypo, target),
        (QuestionKind::IsA, None) => return Err(QuestgenError::UnsupportedType(q.qtype)),
        _ => question_text(q.qtype, target, q.attribute.as_deref())?,
    };
    Ok(Question {
        qtype: q.qtype,
        target: target.to_string(),
        attribute: q.attribute.clone(),
        text,
        gold: Gold::No,
    })
}

/// Draws 4 distinct targets uniformly without replacement from `pool`
/// (which must be sorted) and builds their negative questions.
pub fn sample_negatives_from(q: &Question, pool: &[&str], subject: Option<&str>, rng_seed: u64) -> Result<Vec<Question>> {
    if pool.len() < NEGATIVES_PER_QUESTION {
        return Err(QuestgenError::InsufficientCandidates {
            target: q.target.clone(),
            available: pool.len(),
            needed: NEGATIVES_PER_QUESTION,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    sample(&mut rng, pool.len(), NEGATIVES_PER_QUESTION)
        .into_iter()
        .map(|i| negative_of(q, pool[i], subject))
        .collect()
}

/// Four negatives for a scene question: absent from the scene, outside the
/// target and its hypernym chain, and attribute-compatible.
pub fn sample_negatives(q: &Question, s: &SceneGraph, t: &Taxonomy, rng_seed: u64) -> Result<Vec<Question>> {
    let pool = t.negative_candidates(&q.target, s.concepts(), &required_tags(q))?;
    sample_negatives_from(q, &pool, None, rng_seed)
}

/// Hypernym-substituted copies of a depth-0 instance, one per element of
/// the source leaf's chain. Depths whose negative pool is too small are
/// dropped. With `resample` unset the original negatives are reused.
pub fn substitute_hypernyms(
    inst: &QAInstance,
    t: &Taxonomy,
    scene_concepts: &BTreeSet<&str>,
    neg_seed: u64,
    resample: bool,
) -> Result<Vec<QAInstance>> {
    debug_assert_eq!(inst.substitution_depth, 0);
    let chain = t.hypernym_chain(&inst.source_leaf)?;
    let mut excluded: BTreeSet<&str> = chain.iter().map(String::as_str).collect();
    excluded.insert(&inst.source_leaf);
    let mut out = Vec::with_capacity(chain.len());
    for (i, hyper) in chain.iter().enumerate() {
        let depth = i + 1;
        let mut positive = instantiate_for_target(inst.positive.qtype, hyper, inst.positive.attribute.as_deref())?;
        positive.gold = inst.positive.gold;
        let instance_id = format!("{}#{depth}", inst.instance_id);
        let negatives = if resample {
            let mut ex = excluded.clone();
            ex.extend(t.hypernym_chain(hyper)?.iter().map(String::as_str));
            let pool = t.negative_pool(&ex, scene_concepts.iter().copied(), &required_tags(&positive));
            match sample_negatives_from(&positive, &pool, None, derive_seed(neg_seed, &instance_id)) {
                Ok(n) => n,
                Err(QuestgenError::InsufficientCandidates { .. }) => continue,
                Err(e) => return Err(e),
            }
        } else {
            inst.negatives.clone()
        };
        out.push(QAInstance {
            instance_id,
            scene_id: inst.scene_id.clone(),
            description: inst.description.clone(),
            positive,
            negatives,
            substitution_depth: depth,
            source_leaf: inst.source_leaf.clone(),
            parent_instance_id: Some(inst.instance_id.clone()),
            image: inst.image.clone(),
        });
    }
    Ok(out)
}

/// Largest-remainder apportionment of `quota` over `counts`, capped at the
/// total. Ties in the remainder go to the earlier entry.
pub fn apportion(counts: &[usize], quota: usize) -> Vec<usize> {
    let total: usize = counts.iter().sum();
    if total <= quota {
        return counts.to_vec();
    }
    let mut alloc: Vec<usize> = counts.iter().map(|&c| quota * c / total).collect();
    let assigned: usize = alloc.iter().sum();
    // remainder numerators, compared exactly as integers
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quota * counts[a] % total;
        let rb = quota * counts[b] % total;
        rb.cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(quota - assigned) {
        alloc[i] += 1;
    }
    alloc
}

/// At most `quota` instances per scene, apportioned over question types by
/// their share of the scene's instances and drawn uniformly within a type.
/// Output is sorted by (scene_id, instance_id).
pub fn balance_sample(
    per_scene: &BTreeMap<String, Vec<QAInstance>>,
    quota: usize,
    rng_seed: u64,
) -> Vec<QAInstance> {
    let mut out = Vec::new();
    for (scene_id, items) in per_scene {
        out.extend(balance_scene(scene_id, items, quota, rng_seed));
    }
    out
}

fn balance_scene(scene_id: &str, items: &[QAInstance], quota: usize, rng_seed: u64) -> Vec<QAInstance> {
    let mut by_type: BTreeMap<QuestionKind, Vec<&QAInstance>> = BTreeMap::new();
    for inst in items {
        by_type.entry(inst.positive.qtype).or_default().push(inst);
    }
    for group in by_type.values_mut() {
        group.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    }
    let counts: Vec<usize> = by_type.values().map(Vec::len).collect();
    let alloc = apportion(&counts, quota);
    let mut rng = rng_for(rng_seed, scene_id);
    let mut chosen: Vec<QAInstance> = Vec::new();
    for (group, k) in by_type.values().zip(alloc) {
        let picked = sample(&mut rng, group.len(), k);
        chosen.extend(picked.into_iter().map(|i| group[i].clone()));
    }
    chosen.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    chosen
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedPair {
    pub hyponym: String,
    pub hypernym: String,
    pub available: usize,
}

/// One "is a" instance per (hyponym, hypernym) pair of the stored chains.
/// Negatives replace the hypernym and are drawn from concepts outside the
/// hyponym's chain whose signature covers the hypernym's.
pub fn generate_taxomps(t: &Taxonomy, rng_seed: u64) -> (Vec<QAInstance>, Vec<SkippedPair>) {
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    for (hypo, hyper) in t.hypernym_pairs() {
        let chain = t.hypernym_chain(&hypo).unwrap_or_default();
        let mut excluded: BTreeSet<&str> = chain.iter().map(String::as_str).collect();
        excluded.insert(&hypo);
        let required = t.signature(&hyper).cloned().unwrap_or_default();
        let pool = t.negative_pool(&excluded, std::iter::empty(), &required);
        let positive = Question {
            qtype: QuestionKind::IsA,
            target: hyper.clone(),
            attribute: None,
            text: taxomps_text(&hypo, &hyper),
            gold: Gold::Yes,
        };
        let instance_id = format!("taxomps:{hypo}:{hyper}");
        match sample_negatives_from(&positive, &pool, Some(&hypo), derive_seed(rng_seed, &instance_id)) {
            Ok(negatives) => out.push(QAInstance {
                instance_id,
                scene_id: "taxomps".into(),
                description: String::new(),
                positive,
                negatives,
                substitution_depth: 0,
                source_leaf: hypo,
                parent_instance_id: None,
                image: None,
            }),
            Err(_) => {
                tracing::warn!(%hypo, %hyper, available = pool.len(), "skipping pair: too few negative candidates");
                skipped.push(SkippedPair {
                    hyponym: hypo,
                    hypernym: hyper,
                    available: pool.len(),
                });
            }
        }
    }
    (out, skipped)
}

/// Counters from generating one scene's depth-0 instances.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneGenStats {
    pub question_rejections: BTreeMap<FilterReason, usize>,
    pub objects_outside_taxonomy: usize,
    pub insufficient_negatives: usize,
}

fn words(s: &str) -> BTreeSet<&str> {
    s.split_whitespace().collect()
}

/// Attribute choices for one question type about one object: each matching
/// held attribute, or one deterministic pick of a class attribute the object
/// does not hold (only when the concept's signature carries the class).
fn attribute_choices(
    qtype: QuestionKind,
    object: &SceneObject,
    t: &Taxonomy,
    rng: &mut ChaCha8Rng,
) -> Vec<Option<String>> {
    let Some(class) = qtype.attribute_class() else {
        return vec![None];
    };
    let held: Vec<&String> = object.attributes.iter().filter(|a| classify(a) == class).collect();
    let held_keys: BTreeSet<String> = held.iter().map(|a| lexicon::attribute_key(a)).collect();
    let name_words = words(&object.name);
    let clash = |a: &str| words(a).iter().any(|w| name_words.contains(w));
    if qtype.uses_held_attribute() {
        let mut seen = BTreeSet::new();
        held.into_iter()
            .filter(|a| seen.insert(lexicon::attribute_key(a)) && !clash(a))
            .map(|a| Some(a.clone()))
            .collect()
    } else {
        let bears = t.signature(&object.name).is_ok_and(|s| s.contains(class.tag()));
        if !bears {
            return Vec::new();
        }
        let options: Vec<&str> = lexicon::vocabulary(class)
            .into_iter()
            .filter(|a| !held_keys.contains(&lexicon::attribute_key(a)) && !clash(a))
            .collect();
        options.choose(rng).map(|a| vec![Some(a.to_string())]).unwrap_or_default()
    }
}

/// Every depth-0 instance a filtered scene supports, with negatives.
pub fn scene_instances(
    s: &SceneGraph,
    description: &str,
    t: &Taxonomy,
    dataset_seed: u64,
    neg_seed: u64,
) -> Result<(Vec<QAInstance>, SceneGenStats)> {
    let mut stats = SceneGenStats::default();
    let mut out = Vec::new();
    let concepts = s.concepts();
    for object in &s.objects {
        if !t.is_leaf(&object.name) {
            stats.objects_outside_taxonomy += 1;
            continue;
        }
        for qtype in QuestionKind::SCENE_TYPES {
            let key = format!("{}:{}:{}", s.scene_id, object.object_id, qtype);
            let mut rng = rng_for(dataset_seed, &key);
            for attribute in attribute_choices(qtype, object, t, &mut rng) {
                let annotation = QuestionAnnotation {
                    object_ids: vec![object.object_id.clone()],
                    answer: format!("{:?}", qtype.gold()),
                };
                let verdict = filter_question(s, t, &annotation);
                if !verdict.accepted {
                    *stats.question_rejections.entry(verdict.reason).or_default() += 1;
                    continue;
                }
                let positive = instantiate_question(qtype, object, attribute.as_deref())?;
                let instance_id = format!("{key}:{}", attribute.as_deref().unwrap_or("-"));
                let pool = t.negative_candidates(&object.name, concepts.iter().copied(), &required_tags(&positive))?;
                let negatives = match sample_negatives_from(&positive, &pool, None, derive_seed(neg_seed, &instance_id)) {
                    Ok(n) => n,
                    Err(QuestgenError::InsufficientCandidates { .. }) => {
                        stats.insufficient_negatives += 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                };
                out.push(QAInstance {
                    instance_id,
                    scene_id: s.scene_id.clone(),
                    description: description.to_string(),
                    positive,
                    negatives,
                    substitution_depth: 0,
                    source_leaf: object.name.clone(),
                    parent_instance_id: None,
                    image: s.image.clone(),
                });
            }
        }
    }
    out.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    Ok((out, stats))
}
