use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{KnowledgeGraph, Relation};
use crate::extraction::NodeKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub documents: usize,
    pub nodes: BTreeMap<NodeKind, usize>,
    pub edges: BTreeMap<Relation, usize>,
    /// degree → number of nodes with that degree
    pub degree_histogram: BTreeMap<usize, usize>,
    pub max_degree: usize,
    pub mean_degree: f64,
    pub scenarios_without_coding: Vec<String>,
}

pub fn graph_stats(g: &KnowledgeGraph) -> GraphStats {
    let mut nodes: BTreeMap<NodeKind, usize> = NodeKind::ALL.into_iter().map(|k| (k, 0)).collect();
    let mut edges: BTreeMap<Relation, usize> = Relation::ALL.into_iter().map(|r| (r, 0)).collect();
    let mut degree_histogram = BTreeMap::new();
    let mut degree_sum = 0;
    let mut max_degree = 0;
    let mut scenarios_without_coding = Vec::new();
    for node in g.nodes() {
        *nodes.get_mut(&node.id.kind).expect("all kinds") += 1;
        let d = g.degree(&node.id);
        *degree_histogram.entry(d).or_insert(0) += 1;
        degree_sum += d;
        max_degree = max_degree.max(d);
        if node.id.kind == NodeKind::Scenario && g.neighbors(&node.id, Relation::ScenarioCoding).next().is_none() {
            scenarios_without_coding.push(node.id.key.clone());
        }
    }
    for e in g.edges() {
        *edges.get_mut(&e.relation).expect("all relations") += 1;
    }
    let total: usize = nodes.values().sum();
    GraphStats {
        documents: g.documents().len(),
        nodes,
        edges,
        degree_histogram,
        max_degree,
        mean_degree: if total == 0 { 0.0 } else { degree_sum as f64 / total as f64 },
        scenarios_without_coding,
    }
}
