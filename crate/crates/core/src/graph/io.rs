use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{KnowledgeGraph, Relation};
use crate::extraction::{canonicalize, CanonicalKey, NodeKind};

pub const GRAPH_FORMAT_VERSION: u32 = 1;

// Field order is alphabetical so serialized keys come out sorted.

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub display_name: String,
    pub doc_count: u64,
    pub key: String,
    pub kind: NodeKind,
    pub usages: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub a: CanonicalKey,
    pub b: CanonicalKey,
    pub frequency: u64,
    pub relation: Relation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub documents: Vec<String>,
    pub edges: Vec<EdgeRecord>,
    pub nodes: Vec<NodeRecord>,
    pub version: u32,
}

#[derive(Debug, thiserror::Error)]
pub enum GraphIoError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("graph file version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt graph file: {0}")]
    Corrupt(String),
}

impl From<&KnowledgeGraph> for GraphFile {
    fn from(g: &KnowledgeGraph) -> Self {
        GraphFile {
            documents: g.documents.iter().cloned().collect(),
            edges: g
                .edges()
                .map(|e| EdgeRecord { a: e.a, b: e.b, frequency: e.frequency, relation: e.relation })
                .collect(),
            nodes: g
                .nodes()
                .map(|n| NodeRecord {
                    display_name: n.display_name.clone(),
                    doc_count: n.doc_count,
                    key: n.id.key.clone(),
                    kind: n.id.kind,
                    usages: n.usages.iter().cloned().collect(),
                })
                .collect(),
            version: GRAPH_FORMAT_VERSION,
        }
    }
}

impl GraphFile {
    pub fn into_graph(self) -> Result<KnowledgeGraph, GraphIoError> {
        if self.version != GRAPH_FORMAT_VERSION {
            return Err(GraphIoError::VersionMismatch { found: self.version, expected: GRAPH_FORMAT_VERSION });
        }
        let corrupt = |m: String| GraphIoError::Corrupt(m);
        let mut g = KnowledgeGraph::new();
        for rec in self.nodes {
            let id = canonicalize(&rec.key, rec.kind).map_err(|e| corrupt(e.to_string()))?;
            if id.key != rec.key {
                return Err(corrupt(format!("node key {:?} is not normalized", rec.key)));
            }
            if g.nodes.contains_key(&id) {
                return Err(corrupt(format!("duplicate node {id}")));
            }
            g.upsert_node(id, rec.display_name, rec.usages.into_iter().collect::<BTreeSet<_>>(), rec.doc_count);
        }
        for rec in self.edges {
            if rec.a >= rec.b || g.frequency(&rec.a, &rec.b) != 0 {
                return Err(corrupt(format!("edge {} - {} is duplicated or unordered", rec.a, rec.b)));
            }
            if super::Relation::between(rec.a.kind, rec.b.kind) != Some(rec.relation) {
                return Err(corrupt(format!("edge {} - {} labelled {}", rec.a, rec.b, rec.relation)));
            }
            g.add_edge(&rec.a, &rec.b, rec.frequency).map_err(|e| corrupt(e.to_string()))?;
        }
        for doc in self.documents {
            g.insert_document_id(doc);
        }
        g.check_invariants().map_err(|e| corrupt(e.to_string()))?;
        Ok(g)
    }
}

/// Serialized bytes for `g`: pretty JSON with sorted keys and a trailing newline.
pub fn graph_to_json(g: &KnowledgeGraph) -> String {
    let mut s = serde_json::to_string_pretty(&GraphFile::from(g)).expect("serializable graph");
    s.push('\n');
    s
}

pub fn save_graph(g: &KnowledgeGraph, path: &Path) -> Result<(), GraphIoError> {
    let io = |source| GraphIoError::Io { path: path.display().to_string(), source };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io)?;
    }
    fs::write(path, graph_to_json(g)).map_err(io)
}

pub fn load_graph(path: &Path) -> Result<KnowledgeGraph, GraphIoError> {
    let text = fs::read_to_string(path).map_err(|source| GraphIoError::Io { path: path.display().to_string(), source })?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| GraphIoError::Corrupt(e.to_string()))?;
    if let Some(found) = value.get("version").and_then(|v| v.as_u64()) {
        if found != GRAPH_FORMAT_VERSION as u64 {
            return Err(GraphIoError::VersionMismatch { found: found as u32, expected: GRAPH_FORMAT_VERSION });
        }
    }
    let file: GraphFile = serde_json::from_value(value).map_err(|e| GraphIoError::Corrupt(e.to_string()))?;
    file.into_graph()
}
