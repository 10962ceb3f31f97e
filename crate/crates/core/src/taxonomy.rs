//! Reference hypernym taxonomy.
//!
//! The file format is line oriented UTF-8:
//!
//! ```text
//! # comment
//! @blocklist: entity, material, conveyance
//! dog: canine, mammal, vertebrate, animal
//! @attrs dog: color
//! ```
//!
//! A chain line lists a leaf followed by its hypernyms, nearest first. Each
//! pair of neighbours in a chain contributes one hypernym edge; the union of
//! those edges must be acyclic. `@attrs` lines attach attribute-class tags
//! used for negative sampling.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TaxonomyError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("hypernym cycle through `{concept}`")]
    Cycle { concept: String },
    #[error("line {line}: blocklisted concept `{concept}` appears in a chain")]
    Blocklisted { line: usize, concept: String },
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
    #[error("`{0}` and `{1}` are not connected by hypernym edges")]
    Disconnected(String, String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

type Result<T, E = TaxonomyError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Concept {
    pub id: String,
    pub display: String,
}

impl Concept {
    pub fn new(id: impl Into<String>) -> Self {
        let id = id.into();
        let display = id.replace('_', " ");
        Self { id, display }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypernymChain {
    pub leaf: Concept,
    /// Nearest hypernym first, topmost last.
    pub chain: Vec<Concept>,
}

#[derive(Debug, Clone)]
pub struct Taxonomy {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
    chains: BTreeMap<String, Vec<String>>,
    derived: BTreeMap<String, Vec<String>>,
    blocklist: BTreeSet<String>,
    signatures: BTreeMap<String, BTreeSet<String>>,
    parents: Vec<BTreeSet<usize>>,
    neighbours: Vec<BTreeSet<usize>>,
    ancestors: Vec<BTreeSet<usize>>,
}

fn normalize(id: &str) -> String {
    id.trim().to_lowercase()
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(normalize).filter(|s| !s.is_empty()).collect()
}

struct RawChain {
    line: usize,
    leaf: String,
    chain: Vec<String>,
}

impl Taxonomy {
    /// Parses and validates a taxonomy file.
    pub fn load(source: impl BufRead) -> Result<Self> {
        let mut raw = Vec::new();
        let mut blocklist = BTreeSet::new();
        let mut attrs: BTreeMap<String, (usize, BTreeSet<String>)> = BTreeMap::new();
        let mut seen_leaves = BTreeMap::new();

        for (i, line) in source.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let parse_err = |message: String| TaxonomyError::Parse {
                line: line_no,
                message,
            };
            let (head, tail) = content
                .split_once(':')
                .ok_or_else(|| parse_err(format!("expected `name: items`, got `{content}`")))?;
            let head = head.trim();
            if let Some(directive) = head.strip_prefix('@') {
                let mut words = directive.split_whitespace();
                match words.next() {
                    Some("blocklist") if words.next().is_none() => blocklist.extend(split_list(tail)),
                    Some("attrs") => {
                        let concept = normalize(&words.collect::<Vec<_>>().join(" "));
                        if concept.is_empty() {
                            return Err(parse_err("`@attrs` needs a concept id".into()));
                        }
                        attrs
                            .entry(concept)
                            .or_insert_with(|| (line_no, BTreeSet::new()))
                            .1
                            .extend(split_list(tail));
                    }
                    _ => return Err(parse_err(format!("unknown directive `{head}`"))),
                }
                continue;
            }
            let leaf = normalize(head);
            if leaf.is_empty() {
                return Err(parse_err("empty leaf id".into()));
            }
            if let Some(prev) = seen_leaves.insert(leaf.clone(), line_no) {
                return Err(parse_err(format!("`{leaf}` already has a chain on line {prev}")));
            }
            let chain = split_list(tail);
            if chain.contains(&leaf) {
                return Err(parse_err(format!("`{leaf}` lists itself as a hypernym")));
            }
            let mut uniq = BTreeSet::new();
            if let Some(dup) = chain.iter().find(|c| !uniq.insert(c.as_str())) {
                return Err(parse_err(format!("`{dup}` repeated in the chain of `{leaf}`")));
            }
            raw.push(RawChain {
                line: line_no,
                leaf,
                chain,
            });
        }

        for r in &raw {
            if let Some(bad) = std::iter::once(&r.leaf).chain(&r.chain).find(|c| blocklist.contains(*c)) {
                return Err(TaxonomyError::Blocklisted {
                    line: r.line,
                    concept: bad.clone(),
                });
            }
        }
        for (concept, (line, _)) in &attrs {
            if blocklist.contains(concept) {
                return Err(TaxonomyError::Blocklisted {
                    line: *line,
                    concept: concept.clone(),
                });
            }
        }

        let mut names: BTreeSet<String> = BTreeSet::new();
        for r in &raw {
            names.insert(r.leaf.clone());
            names.extend(r.chain.iter().cloned());
        }
        names.extend(attrs.keys().cloned());
        let names: Vec<String> = names.into_iter().collect();
        let index: BTreeMap<String, usize> = names.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();

        let mut parents = vec![BTreeSet::new(); names.len()];
        let mut neighbours = vec![BTreeSet::new(); names.len()];
        for r in &raw {
            let path: Vec<usize> = std::iter::once(&r.leaf).chain(&r.chain).map(|c| index[c]).collect();
            for w in path.windows(2) {
                parents[w[0]].insert(w[1]);
                neighbours[w[0]].insert(w[1]);
                neighbours[w[1]].insert(w[0]);
            }
        }
        if let Some(node) = find_cycle(&parents) {
            return Err(TaxonomyError::Cycle {
                concept: names[node].clone(),
            });
        }
        let ancestors = (0..names.len()).map(|i| reachable(&parents, i)).collect();

        let chains: BTreeMap<String, Vec<String>> = raw.into_iter().map(|r| (r.leaf, r.chain)).collect();
        let mut derived = BTreeMap::new();
        for chain in chains.values() {
            for (i, h) in chain.iter().enumerate() {
                if !chains.contains_key(h) {
                    derived.entry(h.clone()).or_insert_with(|| chain[i + 1..].to_vec());
                }
            }
        }
        let mut signatures: BTreeMap<String, BTreeSet<String>> =
            names.iter().map(|n| (n.clone(), BTreeSet::new())).collect();
        for (concept, (_, tags)) in attrs {
            signatures.insert(concept, tags);
        }

        Ok(Self {
            names,
            index,
            chains,
            derived,
            blocklist,
            signatures,
            parents,
            neighbours,
            ancestors,
        })
    }

    /// All concept ids, sorted.
    pub fn concepts(&self) -> &[String] {
        &self.names
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn concept(&self, id: &str) -> Result<Concept> {
        self.idx(id).map(|i| Concept::new(self.names[i].clone()))
    }

    fn idx(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| TaxonomyError::UnknownConcept(id.to_string()))
    }

    pub fn blocklist(&self) -> &BTreeSet<String> {
        &self.blocklist
    }

    /// Concepts that have their own chain record.
    pub fn leaves(&self) -> impl Iterator<Item = &str> + '_ {
        self.chains.keys().map(String::as_str)
    }

    pub fn is_leaf(&self, id: &str) -> bool {
        self.chains.contains_key(id)
    }

    pub fn chains(&self) -> impl Iterator<Item = HypernymChain> + '_ {
        self.chains.iter().map(|(leaf, chain)| HypernymChain {
            leaf: Concept::new(leaf.clone()),
            chain: chain.iter().map(|c| Concept::new(c.clone())).collect(),
        })
    }

    /// Stored chain of `id`, nearest hypernym first.
    ///
    /// Concepts that occur only as hypernyms have no record of their own;
    /// they get the tail following them in the first (by leaf id) chain that
    /// contains them.
    pub fn hypernym_chain(&self, id: &str) -> Result<&[String]> {
        if let Some(c) = self.chains.get(id) {
            return Ok(c);
        }
        self.idx(id)?;
        Ok(self.derived.get(id).map_or(&[], Vec::as_slice))
    }

    pub fn is_strict_hypernym(&self, hyper: &str, hypo: &str) -> Result<bool> {
        self.idx(hyper)?;
        Ok(self.hypernym_chain(hypo)?.iter().any(|c| c == hyper))
    }

    /// Every concept reachable through hypernym edges, across all chains.
    pub fn ancestors(&self, id: &str) -> Result<BTreeSet<&str>> {
        let i = self.idx(id)?;
        Ok(self.ancestors[i].iter().map(|&a| self.names[a].as_str()).collect())
    }

    pub fn direct_hypernyms(&self, id: &str) -> Result<Vec<&str>> {
        let i = self.idx(id)?;
        Ok(self.parents[i].iter().map(|&a| self.names[a].as_str()).collect())
    }

    pub fn signature(&self, id: &str) -> Result<&BTreeSet<String>> {
        self.signatures
            .get(id)
            .ok_or_else(|| TaxonomyError::UnknownConcept(id.to_string()))
    }

    /// Number of edges on the shortest undirected path between two concepts.
    pub fn path_length(&self, a: &str, b: &str) -> Result<usize> {
        let (ia, ib) = (self.idx(a)?, self.idx(b)?);
        self.distances_from(ia)[ib].ok_or_else(|| TaxonomyError::Disconnected(a.into(), b.into()))
    }

    /// 1 / (1 + d) with d the shortest undirected path length in edges;
    /// 0 for concepts in different trees.
    pub fn path_similarity(&self, a: &str, b: &str) -> Result<f64> {
        let (ia, ib) = (self.idx(a)?, self.idx(b)?);
        Ok(similarity(self.distances_from(ia)[ib]))
    }

    /// Path similarities among `ids`, row-major `ids.len()` squared.
    pub fn path_similarity_matrix(&self, ids: &[String]) -> Result<Vec<f64>> {
        let idx: Vec<usize> = ids.iter().map(|i| self.idx(i)).collect::<Result<_>>()?;
        let n = idx.len();
        let mut out = vec![0.0; n * n];
        for (r, &i) in idx.iter().enumerate() {
            let dist = self.distances_from(i);
            for (c, &j) in idx.iter().enumerate() {
                out[r * n + c] = similarity(dist[j]);
            }
        }
        Ok(out)
    }

    fn distances_from(&self, start: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.names.len()];
        dist[start] = Some(0);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for &v in &self.neighbours[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// `scene` plus every hypernym of a known scene concept. A concept in this
    /// set is present in the scene, directly or through one of its members.
    pub fn scene_closure<'a>(&'a self, scene: impl IntoIterator<Item = &'a str>) -> BTreeSet<&'a str> {
        let mut out = BTreeSet::new();
        for s in scene {
            out.insert(s);
            if let Some(&i) = self.index.get(s) {
                out.extend(self.ancestors[i].iter().map(|&a| self.names[a].as_str()));
            }
        }
        out
    }

    /// Sorted concepts that are outside `excluded`, absent from the scene
    /// closure, and whose attribute signature covers `required_tags`.
    pub fn negative_pool<'a>(
        &'a self,
        excluded: &BTreeSet<&str>,
        scene: impl IntoIterator<Item = &'a str>,
        required_tags: &BTreeSet<String>,
    ) -> Vec<&'a str> {
        let present = self.scene_closure(scene);
        self.names
            .iter()
            .map(String::as_str)
            .filter(|c| !excluded.contains(c) && !present.contains(c))
            .filter(|c| required_tags.is_subset(&self.signatures[*c]))
            .collect()
    }

    /// Negative-sample candidates for `target`: not in the scene, not the
    /// target or one of its hypernyms, and attribute-compatible.
    pub fn negative_candidates<'a>(
        &'a self,
        target: &str,
        scene: impl IntoIterator<Item = &'a str>,
        required_tags: &BTreeSet<String>,
    ) -> Result<Vec<&'a str>> {
        let mut excluded: BTreeSet<&str> = self.hypernym_chain(target)?.iter().map(String::as_str).collect();
        excluded.insert(target);
        Ok(self.negative_pool(&excluded, scene, required_tags))
    }

    /// Every (hyponym, hypernym) pair from the stored chains, sorted.
    pub fn hypernym_pairs(&self) -> Vec<(String, String)> {
        let mut pairs: BTreeSet<(String, String)> = BTreeSet::new();
        for (leaf, chain) in &self.chains {
            for h in chain {
                pairs.insert((leaf.clone(), h.clone()));
            }
        }
        pairs.into_iter().collect()
    }
}

impl std::str::FromStr for Taxonomy {
    type Err = TaxonomyError;

    fn from_str(s: &str) -> Result<Self> {
        Self::load(s.as_bytes())
    }
}

fn similarity(distance: Option<usize>) -> f64 {
    distance.map_or(0.0, |d| 1.0 / (1.0 + d as f64))
}

fn find_cycle(parents: &[BTreeSet<usize>]) -> Option<usize> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let mut mark = vec![Mark::New; parents.len()];
    for root in 0..parents.len() {
        if mark[root] != Mark::New {
            continue;
        }
        // iterative DFS: (node, next parent cursor)
        let mut stack: Vec<(usize, Vec<usize>)> = vec![(root, parents[root].iter().copied().collect())];
        mark[root] = Mark::Active;
        while let Some((node, pending)) = stack.last_mut() {
            match pending.pop() {
                Some(p) => match mark[p] {
                    Mark::Active => return Some(p),
                    Mark::New => {
                        mark[p] = Mark::Active;
                        stack.push((p, parents[p].iter().copied().collect()));
                    }
                    Mark::Done => {}
                },
                None => {
                    mark[*node] = Mark::Done;
                    stack.pop();
                }
            }
        }
    }
    None
}

fn reachable(parents: &[BTreeSet<usize>], start: usize) -> BTreeSet<usize> {
    let mut seen = BTreeSet::new();
    let mut stack: Vec<usize> = parents[start].iter().copied().collect();
    while let Some(u) = stack.pop() {
        if seen.insert(u) {
            stack.extend(parents[u].iter().copied());
        }
    }
    seen
}
