//! Scenario-centric co-occurrence graph.
//!
//! Nodes are application scenarios (AS), domain knowledge (DK), domain skills
//! (DS) and coding skills (CS). Edges are undirected and exist only for five
//! kind pairs: AS-DK, AS-CS, DK-DS, DK-DK and CS-CS. An edge's frequency is the
//! number of distinct documents in which both endpoints occur together.

mod io;
mod stats;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::extraction::{canonicalize, CanonicalKey, ExtractedElements, NodeKind};

pub use io::{graph_to_json, load_graph, save_graph, EdgeRecord, GraphFile, GraphIoError, NodeRecord, GRAPH_FORMAT_VERSION};
pub use stats::{graph_stats, GraphStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "AS-DK")]
    ScenarioKnowledge,
    #[serde(rename = "AS-CS")]
    ScenarioCoding,
    #[serde(rename = "DK-DS")]
    KnowledgeSkill,
    #[serde(rename = "DK-DK")]
    KnowledgeKnowledge,
    #[serde(rename = "CS-CS")]
    CodingCoding,
}

impl Relation {
    pub const ALL: [Relation; 5] = [
        Relation::ScenarioKnowledge,
        Relation::ScenarioCoding,
        Relation::KnowledgeSkill,
        Relation::KnowledgeKnowledge,
        Relation::CodingCoding,
    ];

    /// The relation joining two node kinds, if any. Symmetric.
    pub fn between(a: NodeKind, b: NodeKind) -> Option<Relation> {
        use NodeKind::*;
        match (a, b) {
            (Scenario, Knowledge) | (Knowledge, Scenario) => Some(Relation::ScenarioKnowledge),
            (Scenario, Coding) | (Coding, Scenario) => Some(Relation::ScenarioCoding),
            (Knowledge, Skill) | (Skill, Knowledge) => Some(Relation::KnowledgeSkill),
            (Knowledge, Knowledge) => Some(Relation::KnowledgeKnowledge),
            (Coding, Coding) => Some(Relation::CodingCoding),
            _ => None,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Relation::ScenarioKnowledge => "AS-DK",
            Relation::ScenarioCoding => "AS-CS",
            Relation::KnowledgeSkill => "DK-DS",
            Relation::KnowledgeKnowledge => "DK-DK",
            Relation::CodingCoding => "CS-CS",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub id: CanonicalKey,
    /// Lexicographically smallest raw spelling seen, so the choice does not
    /// depend on document order.
    pub display_name: String,
    pub usages: BTreeSet<String>,
    pub doc_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub a: CanonicalKey,
    pub b: CanonicalKey,
    pub relation: Relation,
    pub frequency: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("document {0:?} already accumulated")]
    DuplicateDocument(String),
    #[error("invalid elements for document {doc}: {reason}")]
    InvalidElements { doc: String, reason: String },
    #[error("no relation joins {0} and {1}")]
    InvalidRelation(CanonicalKey, CanonicalKey),
    #[error("self-loop on {0}")]
    SelfLoop(CanonicalKey),
    #[error("unknown node {0}")]
    UnknownNode(CanonicalKey),
    #[error("graph invariant violated: {0}")]
    Invariant(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnowledgeGraph {
    nodes: BTreeMap<CanonicalKey, Node>,
    adjacency: BTreeMap<CanonicalKey, BTreeMap<CanonicalKey, u64>>,
    documents: BTreeSet<String>,
}

/// One document's contribution, already reduced to sets.
struct DocumentContribution {
    nodes: BTreeMap<CanonicalKey, (String, BTreeSet<String>)>,
    pairs: BTreeSet<(CanonicalKey, CanonicalKey)>,
}

fn ordered(a: CanonicalKey, b: CanonicalKey) -> (CanonicalKey, CanonicalKey) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl DocumentContribution {
    fn from_elements(e: &ExtractedElements) -> Result<Self, GraphError> {
        e.validate().map_err(|reason| GraphError::InvalidElements { doc: e.doc_id.clone(), reason })?;
        let invalid = |reason: String| GraphError::InvalidElements { doc: e.doc_id.clone(), reason };
        let mut nodes: BTreeMap<CanonicalKey, (String, BTreeSet<String>)> = BTreeMap::new();
        let mut add = |kind: NodeKind, name: &str, usage: Option<&str>| -> Result<CanonicalKey, GraphError> {
            let key = canonicalize(name, kind).map_err(|err| invalid(format!("{name:?}: {err}")))?;
            let raw = name.trim().to_string();
            let entry = nodes.entry(key.clone()).or_insert_with(|| (raw.clone(), BTreeSet::new()));
            if raw < entry.0 {
                entry.0 = raw;
            }
            if let Some(u) = usage.map(str::trim).filter(|u| !u.is_empty()) {
                entry.1.insert(u.to_string());
            }
            Ok(key)
        };

        let scenario = add(NodeKind::Scenario, &e.scenario, None)?;
        let mut knowledge = Vec::new();
        let mut pairs = BTreeSet::new();
        for (k, s) in e.knowledge.iter().zip(&e.skills) {
            let dk = add(NodeKind::Knowledge, &k.name, Some(&k.usage))?;
            if let Some(s) = s {
                let ds = add(NodeKind::Skill, &s.name, Some(&s.usage))?;
                pairs.insert(ordered(dk.clone(), ds));
            }
            knowledge.push(dk);
        }
        let coding = e
            .coding_skills
            .present()
            .map(|c| add(NodeKind::Coding, &c.name, Some(&c.usage)))
            .collect::<Result<Vec<_>, _>>()?;

        for group in [&knowledge, &coding] {
            for (i, x) in group.iter().enumerate() {
                pairs.insert(ordered(scenario.clone(), x.clone()));
                for y in &group[i + 1..] {
                    if x != y {
                        pairs.insert(ordered(x.clone(), y.clone()));
                    }
                }
            }
        }
        Ok(DocumentContribution { nodes, pairs })
    }
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: &CanonicalKey) -> Option<&Node> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.values()
    }

    pub fn nodes_of(&self, kind: NodeKind) -> impl Iterator<Item = &Node> {
        self.nodes.values().filter(move |n| n.id.kind == kind)
    }

    pub fn documents(&self) -> &BTreeSet<String> {
        &self.documents
    }

    pub fn frequency(&self, a: &CanonicalKey, b: &CanonicalKey) -> u64 {
        self.adjacency.get(a).and_then(|m| m.get(b)).copied().unwrap_or(0)
    }

    /// Neighbors of `id` reachable through `relation`, in key order.
    pub fn neighbors<'a>(
        &'a self,
        id: &'a CanonicalKey,
        relation: Relation,
    ) -> impl Iterator<Item = (&'a CanonicalKey, u64)> + 'a {
        self.adjacency
            .get(id)
            .into_iter()
            .flat_map(|m| m.iter())
            .filter(move |(other, _)| Relation::between(id.kind, other.kind) == Some(relation))
            .map(|(k, f)| (k, *f))
    }

    pub fn degree(&self, id: &CanonicalKey) -> usize {
        self.adjacency.get(id).map_or(0, BTreeMap::len)
    }

    /// Each undirected edge once, with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.adjacency.iter().flat_map(|(a, m)| {
            m.iter().filter(move |(b, _)| a < *b).map(move |(b, f)| Edge {
                a: a.clone(),
                b: b.clone(),
                relation: Relation::between(a.kind, b.kind).expect("validated on insert"),
                frequency: *f,
            })
        })
    }

    /// Adds one document's elements. Each induced pair gains exactly 1, however
    /// often it repeats inside the document.
    pub fn accumulate_document(&mut self, e: &ExtractedElements) -> Result<(), GraphError> {
        if self.documents.contains(&e.doc_id) {
            return Err(GraphError::DuplicateDocument(e.doc_id.clone()));
        }
        let contribution = DocumentContribution::from_elements(e)?;
        self.documents.insert(e.doc_id.clone());
        for (id, (raw, usages)) in contribution.nodes {
            self.upsert_node(id, raw, usages, 1);
        }
        for (a, b) in contribution.pairs {
            self.bump(&a, &b, 1);
        }
        Ok(())
    }

    fn upsert_node(&mut self, id: CanonicalKey, raw: String, usages: BTreeSet<String>, docs: u64) {
        match self.nodes.get_mut(&id) {
            Some(node) => {
                if raw < node.display_name {
                    node.display_name = raw;
                }
                node.usages.extend(usages);
                node.doc_count += docs;
            }
            None => {
                self.nodes.insert(id.clone(), Node { id, display_name: raw, usages, doc_count: docs });
            }
        }
    }

    fn bump(&mut self, a: &CanonicalKey, b: &CanonicalKey, by: u64) {
        *self.adjacency.entry(a.clone()).or_default().entry(b.clone()).or_default() += by;
        *self.adjacency.entry(b.clone()).or_default().entry(a.clone()).or_default() += by;
    }

    /// Inserts (or extends) a node directly. Intended for fixtures and tools;
    /// pipeline graphs are built from documents.
    pub fn add_node(&mut self, kind: NodeKind, name: &str, usages: &[&str]) -> Result<CanonicalKey, GraphError> {
        let id = canonicalize(name, kind).map_err(|e| GraphError::Invariant(e.to_string()))?;
        let usages = usages.iter().map(|u| u.to_string()).collect();
        self.upsert_node(id.clone(), name.trim().to_string(), usages, 0);
        Ok(id)
    }

    /// Adds `frequency` to the undirected edge between two existing nodes.
    pub fn add_edge(&mut self, a: &CanonicalKey, b: &CanonicalKey, frequency: u64) -> Result<(), GraphError> {
        for id in [a, b] {
            if !self.nodes.contains_key(id) {
                return Err(GraphError::UnknownNode(id.clone()));
            }
        }
        if a == b {
            return Err(GraphError::SelfLoop(a.clone()));
        }
        if Relation::between(a.kind, b.kind).is_none() {
            return Err(GraphError::InvalidRelation(a.clone(), b.clone()));
        }
        if frequency == 0 {
            return Err(GraphError::Invariant("edge frequency must be positive".into()));
        }
        self.bump(a, b, frequency);
        Ok(())
    }

    pub(crate) fn insert_document_id(&mut self, id: String) {
        self.documents.insert(id);
    }

    /// Folds another graph built from a disjoint set of documents into this one.
    pub fn merge(&mut self, other: KnowledgeGraph) -> Result<(), GraphError> {
        if let Some(dup) = other.documents.intersection(&self.documents).next() {
            return Err(GraphError::DuplicateDocument(dup.clone()));
        }
        self.documents.extend(other.documents);
        for (id, node) in other.nodes {
            self.upsert_node(id, node.display_name, node.usages, node.doc_count);
        }
        for (a, m) in other.adjacency {
            for (b, f) in m {
                *self.adjacency.entry(a.clone()).or_default().entry(b).or_default() += f;
            }
        }
        Ok(())
    }

    pub fn check_invariants(&self) -> Result<(), GraphError> {
        let fail = |m: String| Err(GraphError::Invariant(m));
        for (a, m) in &self.adjacency {
            if !self.nodes.contains_key(a) {
                return fail(format!("edge endpoint {a} is not a node"));
            }
            for (b, f) in m {
                if a == b {
                    return fail(format!("self-loop on {a}"));
                }
                if *f == 0 {
                    return fail(format!("zero frequency on {a} - {b}"));
                }
                if Relation::between(a.kind, b.kind).is_none() {
                    return fail(format!("no relation joins {a} and {b}"));
                }
                if self.frequency(b, a) != *f {
                    return fail(format!("asymmetric frequency on {a} - {b}"));
                }
            }
        }
        for node in self.nodes.values() {
            if node.id.kind != NodeKind::Scenario && node.usages.is_empty() {
                return fail(format!("{} has no usages", node.id));
            }
            if node.id.kind == NodeKind::Skill && self.neighbors(&node.id, Relation::KnowledgeSkill).next().is_none() {
                return fail(format!("{} is not paired with any knowledge", node.id));
            }
        }
        Ok(())
    }
}

/// Builds a graph from extracted elements. Later records reusing a doc id are
/// skipped (logged), as are structurally invalid records. Accumulation is
/// partitioned across threads and merged, so the result is independent of
/// stream order and worker count.
pub fn build_graph<I>(elements: I) -> KnowledgeGraph
where
    I: IntoIterator<Item = ExtractedElements>,
{
    let mut seen = HashSet::new();
    let unique: Vec<ExtractedElements> = elements
        .into_iter()
        .filter(|e| {
            let fresh = seen.insert(e.doc_id.clone());
            if !fresh {
                log::warn!("skipping repeated document id {:?}", e.doc_id);
            }
            fresh
        })
        .collect();
    unique
        .par_chunks(64)
        .map(|chunk| {
            let mut g = KnowledgeGraph::new();
            for e in chunk {
                if let Err(err) = g.accumulate_document(e) {
                    log::warn!("{err}");
                }
            }
            g
        })
        .reduce(KnowledgeGraph::new, |mut a, b| {
            a.merge(b).expect("document ids are disjoint across partitions");
            a
        })
}
