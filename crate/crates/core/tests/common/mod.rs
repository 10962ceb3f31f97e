#![allow(dead_code)]

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::PathBuf;

use proptest::prelude::*;
use serde_json::{json, Map, Value};
use taxoprobe_core::lexicon::{COLORS, MATERIALS, STATES};
use taxoprobe_core::scene::{parse_scene_graph, SceneGraph};
use taxoprobe_core::questgen::NEGATIVES_PER_QUESTION;
use taxoprobe_core::{Gold, QAInstance, Taxonomy};

pub const TAGS: [&str; 3] = ["color", "material", "state"];
pub const PREDICATES: [&str; 4] = ["on", "near", "behind", "next to"];

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture_taxonomy() -> Taxonomy {
    std::fs::read_to_string(fixtures().join("taxonomy.txt"))
        .unwrap()
        .parse()
        .unwrap()
}

/// A random forest over `node00`, `node01`, ... kept as a plain parent
/// array so tests can answer ancestry questions without the library.
#[derive(Debug, Clone)]
pub struct ForestSpec {
    pub parent: Vec<Option<usize>>,
    pub tags: Vec<BTreeSet<&'static str>>,
}

pub fn node(i: usize) -> String {
    format!("node{i:02}")
}

impl ForestSpec {
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn names(&self) -> Vec<String> {
        (0..self.len()).map(node).collect()
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        name.strip_prefix("node")?.parse().ok().filter(|&i| i < self.len())
    }

    /// Strict ancestors, nearest first.
    pub fn chain(&self, i: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = self.parent[i];
        while let Some(p) = cur {
            out.push(p);
            cur = self.parent[p];
        }
        out
    }

    pub fn is_leaf(&self, i: usize) -> bool {
        !self.parent.contains(&Some(i))
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_leaf(i)).collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for leaf in self.leaves() {
            let chain: Vec<String> = self.chain(leaf).into_iter().map(node).collect();
            let _ = writeln!(s, "{}: {}", node(leaf), chain.join(", "));
        }
        for (i, tags) in self.tags.iter().enumerate() {
            if !tags.is_empty() {
                let tags: Vec<&str> = tags.iter().copied().collect();
                let _ = writeln!(s, "@attrs {}: {}", node(i), tags.join(", "));
            }
        }
        s
    }

    pub fn taxonomy(&self) -> Taxonomy {
        self.to_text().parse().expect("generated taxonomy parses")
    }
}

pub fn forest(max_nodes: usize) -> impl Strategy<Value = ForestSpec> {
    (6..=max_nodes)
        .prop_flat_map(|n| {
            let parents: Vec<BoxedStrategy<Option<usize>>> = (0..n)
                .map(|i| {
                    if i < 2 {
                        Just(None).boxed()
                    } else {
                        prop_oneof![1 => Just(None), 6 => (0..i).prop_map(Some)].boxed()
                    }
                })
                .collect();
            let tags = proptest::collection::vec(proptest::sample::subsequence(TAGS.to_vec(), 0..=3), n);
            (parents, tags)
        })
        .prop_map(|(parent, tags)| ForestSpec {
            parent,
            tags: tags.into_iter().map(|t| t.into_iter().collect()).collect(),
        })
}

fn attribute_vocab() -> Vec<&'static str> {
    let mut v: Vec<&str> = COLORS.to_vec();
    v.extend(MATERIALS.iter().map(|(adj, _)| *adj));
    v.extend(STATES);
    v
}

#[derive(Debug, Clone)]
pub struct SceneSpec {
    /// Node index per object; `None` for a name outside the taxonomy.
    pub objects: Vec<Option<usize>>,
    pub attributes: Vec<Vec<&'static str>>,
    /// (from, predicate, to) by object position.
    pub relations: Vec<(usize, &'static str, usize)>,
}

impl SceneSpec {
    pub fn name(&self, i: usize) -> String {
        match self.objects[i] {
            Some(n) => node(n),
            None => format!("thing{i}"),
        }
    }

    pub fn to_scene(&self, scene_id: &str) -> SceneGraph {
        let mut objects = Map::new();
        for i in 0..self.objects.len() {
            let rels: Vec<Value> = self
                .relations
                .iter()
                .filter(|(from, _, _)| *from == i)
                .map(|(_, p, to)| json!({"name": p, "object": format!("o{to}")}))
                .collect();
            objects.insert(
                format!("o{i}"),
                json!({"name": self.name(i), "attributes": self.attributes[i], "relations": rels}),
            );
        }
        parse_scene_graph(scene_id, &json!({ "objects": objects })).unwrap()
    }
}

/// Scenes over distinct `candidates`, plus optionally one arbitrary node
/// of the forest and one name outside it.
pub fn scene(candidates: Vec<usize>, n_nodes: usize) -> impl Strategy<Value = SceneSpec> {
    let vocab = attribute_vocab();
    let max = candidates.len().min(5);
    let picks = proptest::sample::subsequence(candidates, 1..=max);
    (picks, proptest::option::of(0..n_nodes), any::<bool>())
        .prop_flat_map(move |(mut nodes, extra, outsider)| {
            nodes.reverse();
            if let Some(e) = extra.filter(|e| !nodes.contains(e)) {
                nodes.push(e);
            }
            let mut objects: Vec<Option<usize>> = nodes.into_iter().map(Some).collect();
            if outsider {
                objects.push(None);
            }
            let n = objects.len();
            let attrs = proptest::collection::vec(proptest::sample::subsequence(vocab.clone(), 0..=2), n);
            let rels = proptest::collection::vec(
                (0..n, proptest::sample::select(PREDICATES.to_vec()), 0..n),
                0..=n,
            );
            (Just(objects), attrs, rels)
        })
        .prop_map(|(objects, attributes, relations)| SceneSpec {
            objects,
            attributes,
            relations: relations.into_iter().filter(|(a, _, b)| a != b).collect(),
        })
}

pub fn forest_and_scene() -> impl Strategy<Value = (ForestSpec, SceneSpec)> {
    forest(36).prop_flat_map(|f| {
        let n = f.len();
        let leaves = f.leaves();
        (Just(f), scene(leaves, n))
    })
}

/// Attribute class a question type asks about, by type name.
fn expected_tag(qtype_name: &str) -> Option<&'static str> {
    if qtype_name.contains("Material") {
        Some("material")
    } else if qtype_name.contains("That") {
        Some("state")
    } else if qtype_name.contains("Attr") {
        Some("color")
    } else {
        None
    }
}

/// Every way the negatives of `inst` break the sampling rules, checked
/// against the generating forest and scene rather than the library.
pub fn violations(f: &ForestSpec, s: &SceneSpec, inst: &QAInstance) -> Vec<String> {
    let mut present: BTreeSet<String> = BTreeSet::new();
    for i in 0..s.objects.len() {
        present.insert(s.name(i));
        if let Some(n) = s.objects[i] {
            present.extend(f.chain(n).into_iter().map(node));
        }
    }
    let leaf = f.index(&inst.source_leaf).expect("source leaf is a forest node");
    let mut related: BTreeSet<String> = f.chain(leaf).into_iter().map(node).collect();
    related.insert(inst.source_leaf.clone());

    let mut out = Vec::new();
    if inst.negatives.len() != NEGATIVES_PER_QUESTION {
        out.push(format!("{}: {} negatives", inst.instance_id, inst.negatives.len()));
    }
    let distinct: BTreeSet<&str> = inst.negatives.iter().map(|q| q.target.as_str()).collect();
    if distinct.len() != inst.negatives.len() {
        out.push(format!("{}: repeated negative target", inst.instance_id));
    }
    let tag = expected_tag(inst.positive.qtype.name());
    for q in &inst.negatives {
        if present.contains(&q.target) {
            out.push(format!("{}: `{}` is present in the scene", inst.instance_id, q.target));
        }
        if related.contains(&q.target) {
            out.push(format!("{}: `{}` is on the target's chain", inst.instance_id, q.target));
        }
        if let Some(tag) = tag {
            let n = f.index(&q.target).expect("negative is a forest node");
            if !f.tags[n].contains(tag) {
                out.push(format!("{}: `{}` lacks `{tag}`", inst.instance_id, q.target));
            }
        }
        if q.gold != Gold::No || q.qtype != inst.positive.qtype || q.attribute != inst.positive.attribute {
            out.push(format!("{}: malformed negative `{}`", inst.instance_id, q.text));
        }
    }
    out
}
