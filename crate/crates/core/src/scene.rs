//! GQA-style scene graphs: parsing, filtering and text rendering.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::lexicon::{is_plurale_tantum, with_article};
use crate::taxonomy::Taxonomy;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: relation points at missing object `{target}`")]
    DanglingTarget { path: String, target: String },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("scene `{0}` appears in more than one file")]
    DuplicateScene(String),
}

type Result<T, E = SceneError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub predicate: String,
    pub target: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneObject {
    pub object_id: String,
    pub name: String,
    pub attributes: Vec<String>,
    pub relations: Vec<Relation>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SceneGraph {
    pub scene_id: String,
    /// Sorted by `object_id`.
    pub objects: Vec<SceneObject>,
    pub image: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterReason {
    Ok,
    TooManyObjects,
    DuplicateLabels,
    MultiObjectQuestion,
    HypernymOverlap,
    UnsupportedAnswerType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterVerdict {
    pub accepted: bool,
    pub reason: FilterReason,
}

impl FilterVerdict {
    pub const OK: Self = Self {
        accepted: true,
        reason: FilterReason::Ok,
    };

    pub fn reject(reason: FilterReason) -> Self {
        debug_assert_ne!(reason, FilterReason::Ok);
        Self {
            accepted: false,
            reason,
        }
    }
}

/// What `filter_question` needs to know about a question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionAnnotation {
    /// Scene objects the question refers to.
    pub object_ids: Vec<String>,
    pub answer: String,
}

fn schema(path: &str, message: impl Into<String>) -> SceneError {
    SceneError::Schema {
        path: path.to_string(),
        message: message.into(),
    }
}

fn string_at(v: &Value, path: &str) -> Result<String> {
    v.as_str()
        .map(str::to_string)
        .ok_or_else(|| schema(path, format!("expected a string, got {v}")))
}

fn parse_object(id: &str, v: &Value, path: &str) -> Result<SceneObject> {
    let obj = v
        .as_object()
        .ok_or_else(|| schema(path, "expected an object"))?;
    let name_path = format!("{path}.name");
    let name = obj
        .get("name")
        .ok_or_else(|| schema(&name_path, "missing"))
        .and_then(|n| string_at(n, &name_path))?
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join("_");
    if name.is_empty() {
        return Err(schema(&name_path, "empty name"));
    }
    let mut attributes = Vec::new();
    if let Some(a) = obj.get("attributes") {
        let apath = format!("{path}.attributes");
        let arr = a.as_array().ok_or_else(|| schema(&apath, "expected an array"))?;
        for (i, x) in arr.iter().enumerate() {
            attributes.push(string_at(x, &format!("{apath}[{i}]"))?.trim().to_lowercase());
        }
    }
    let mut relations = Vec::new();
    if let Some(r) = obj.get("relations") {
        let rpath = format!("{path}.relations");
        let arr = r.as_array().ok_or_else(|| schema(&rpath, "expected an array"))?;
        for (i, x) in arr.iter().enumerate() {
            let p = format!("{rpath}[{i}]");
            let pred = x.get("name").ok_or_else(|| schema(&format!("{p}.name"), "missing"))?;
            let target = x.get("object").ok_or_else(|| schema(&format!("{p}.object"), "missing"))?;
            relations.push(Relation {
                predicate: string_at(pred, &format!("{p}.name"))?.trim().to_lowercase(),
                target: string_at(target, &format!("{p}.object"))?,
            });
        }
    }
    Ok(SceneObject {
        object_id: id.to_string(),
        name,
        attributes,
        relations,
    })
}

/// Parses one scene body: `{objects: {id: {name, attributes, relations}}, image?}`.
pub fn parse_scene_graph(scene_id: &str, doc: &Value) -> Result<SceneGraph> {
    let root = format!("$.{scene_id}");
    let body = doc
        .as_object()
        .ok_or_else(|| schema(&root, "expected an object"))?;
    let opath = format!("{root}.objects");
    let objects_v = body
        .get("objects")
        .ok_or_else(|| schema(&opath, "missing"))?
        .as_object()
        .ok_or_else(|| schema(&opath, "expected an object keyed by id"))?;
    if objects_v.is_empty() {
        return Err(schema(&opath, "scene has no objects"));
    }
    let mut objects = Vec::with_capacity(objects_v.len());
    for (id, v) in objects_v {
        objects.push(parse_object(id, v, &format!("{opath}.{id}"))?);
    }
    objects.sort_by(|a, b| a.object_id.cmp(&b.object_id));
    let ids: BTreeSet<&str> = objects.iter().map(|o| o.object_id.as_str()).collect();
    for o in &objects {
        for (i, r) in o.relations.iter().enumerate() {
            if !ids.contains(r.target.as_str()) {
                return Err(SceneError::DanglingTarget {
                    path: format!("{opath}.{}.relations[{i}].object", o.object_id),
                    target: r.target.clone(),
                });
            }
        }
    }
    let image = match body.get("image") {
        None | Some(Value::Null) => None,
        Some(v) => Some(string_at(v, &format!("{root}.image"))?),
    };
    Ok(SceneGraph {
        scene_id: scene_id.to_string(),
        objects,
        image,
    })
}

/// Parses a document mapping scene ids to scene bodies; output sorted by id.
pub fn parse_scene_graphs(text: &str) -> Result<Vec<SceneGraph>> {
    let doc: Value = serde_json::from_str(text)?;
    let map = doc
        .as_object()
        .ok_or_else(|| schema("$", "expected an object keyed by scene id"))?;
    map.iter().map(|(id, v)| parse_scene_graph(id, v)).collect()
}

/// Reads one scene-graph file, or every `*.json` file in a directory.
/// Scene ids must be unique across files.
pub fn load_scene_graphs(path: &Path) -> Result<Vec<SceneGraph>> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| SceneError::Io { path, source }
    };
    let files = if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(io(path))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    let mut all: BTreeMap<String, SceneGraph> = BTreeMap::new();
    for f in files {
        let text = std::fs::read_to_string(&f).map_err(io(&f))?;
        for s in parse_scene_graphs(&text)? {
            if all.contains_key(&s.scene_id) {
                return Err(SceneError::DuplicateScene(s.scene_id));
            }
            all.insert(s.scene_id.clone(), s);
        }
    }
    Ok(all.into_values().collect())
}

impl SceneGraph {
    pub fn object(&self, id: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.object_id == id)
    }

    /// Distinct object names.
    pub fn concepts(&self) -> BTreeSet<&str> {
        self.objects.iter().map(|o| o.name.as_str()).collect()
    }

    /// Scene body in the input schema.
    pub fn to_value(&self) -> Value {
        let mut objects = Map::new();
        for o in &self.objects {
            let relations: Vec<Value> = o
                .relations
                .iter()
                .map(|r| json!({"name": r.predicate, "object": r.target}))
                .collect();
            objects.insert(
                o.object_id.clone(),
                json!({"name": o.name, "attributes": o.attributes, "relations": relations}),
            );
        }
        let mut body = Map::new();
        body.insert("objects".into(), Value::Object(objects));
        if let Some(img) = &self.image {
            body.insert("image".into(), Value::String(img.clone()));
        }
        Value::Object(body)
    }
}

pub const DEFAULT_MAX_OBJECTS: usize = 20;

pub fn filter_scene(s: &SceneGraph, max_objects: usize) -> FilterVerdict {
    if s.objects.len() > max_objects {
        return FilterVerdict::reject(FilterReason::TooManyObjects);
    }
    let mut names = BTreeSet::new();
    if s.objects.iter().any(|o| !names.insert(o.name.as_str())) {
        return FilterVerdict::reject(FilterReason::DuplicateLabels);
    }
    FilterVerdict::OK
}

pub fn filter_question(s: &SceneGraph, t: &Taxonomy, q: &QuestionAnnotation) -> FilterVerdict {
    let distinct: BTreeSet<&str> = q.object_ids.iter().map(String::as_str).collect();
    if distinct.len() != 1 {
        return FilterVerdict::reject(FilterReason::MultiObjectQuestion);
    }
    if !matches!(q.answer.trim().to_lowercase().as_str(), "yes" | "no") {
        return FilterVerdict::reject(FilterReason::UnsupportedAnswerType);
    }
    let target_id = q.object_ids[0].as_str();
    let Some(target) = s.object(target_id) else {
        return FilterVerdict::reject(FilterReason::MultiObjectQuestion);
    };
    let target_hypernyms = t.ancestors(&target.name).unwrap_or_default();
    for other in s.objects.iter().filter(|o| o.object_id != target_id) {
        if target_hypernyms.contains(other.name.as_str()) {
            return FilterVerdict::reject(FilterReason::HypernymOverlap);
        }
        if let Ok(theirs) = t.ancestors(&other.name) {
            if !target_hypernyms.is_disjoint(&theirs) {
                return FilterVerdict::reject(FilterReason::HypernymOverlap);
            }
        }
    }
    FilterVerdict::OK
}

/// Version tag of the description templates, recorded in build manifests.
pub const TEMPLATE_VERSION: &str = "v1";

fn display(o: &SceneObject) -> String {
    o.name.replace('_', " ")
}

fn described(o: &SceneObject) -> String {
    let mut words: Vec<String> = o.attributes.clone();
    words.push(display(o));
    words.join(" ")
}

fn introduce(o: &SceneObject) -> String {
    let phrase = described(o);
    if is_plurale_tantum(&o.name) {
        phrase
    } else {
        with_article(&phrase)
    }
}

fn copula(o: &SceneObject) -> &'static str {
    if is_plurale_tantum(&o.name) {
        "are"
    } else {
        "is"
    }
}

/// Deterministic text description of a scene.
///
/// Objects are introduced in id order, each exactly once with all of its
/// attributes: "There is a brown dog on a yellow surfboard." The first
/// relation of an object whose target has not been introduced yet is folded
/// into the introduction; every other relation gets its own sentence with
/// definite articles ("The dog is next to the table.").
///
/// `seed` is accepted for interface stability; the v1 templates have no
/// random choices.
pub fn render_description(s: &SceneGraph, seed: u64) -> String {
    let _ = seed;
    let by_id: BTreeMap<&str, &SceneObject> = s.objects.iter().map(|o| (o.object_id.as_str(), o)).collect();
    let mut introduced: BTreeSet<&str> = BTreeSet::new();
    let mut folded: BTreeSet<(&str, usize)> = BTreeSet::new();
    let mut sentences = Vec::new();

    for o in &s.objects {
        if introduced.contains(o.object_id.as_str()) {
            continue;
        }
        introduced.insert(&o.object_id);
        let mut sentence = format!("There {} {}", copula(o), introduce(o));
        let inline = o
            .relations
            .iter()
            .enumerate()
            .find(|(_, r)| !introduced.contains(r.target.as_str()));
        if let Some((i, r)) = inline {
            let target = by_id[r.target.as_str()];
            introduced.insert(&target.object_id);
            folded.insert((&o.object_id, i));
            sentence.push_str(&format!(" {} {}", r.predicate, introduce(target)));
        }
        sentence.push('.');
        sentences.push(sentence);
    }
    for o in &s.objects {
        for (i, r) in o.relations.iter().enumerate() {
            if folded.contains(&(o.object_id.as_str(), i)) {
                continue;
            }
            let target = by_id[r.target.as_str()];
            sentences.push(format!(
                "The {} {} {} the {}.",
                display(o),
                copula(o),
                r.predicate,
                display(target)
            ));
        }
    }
    sentences.join(" ")
}
