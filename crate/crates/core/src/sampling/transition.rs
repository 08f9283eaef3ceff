//! Transition probabilities over the co-occurrence graph.
//!
//! For an origin `A` and a walk restricted to a first-hop relation (e.g. AS-DK)
//! and a second-hop layer relation (e.g. DK-DK):
//!
//! * first step: `P1(A→B) = f(A,B) / Σ f(A,B')` over first-hop neighbors;
//! * second step: `P2(A→C) = Σ_B' P1(A→B') · P1(B'→C)` for nodes `C` outside
//!   `N1(A) ∪ {A}`, where `P1(B'→·)` is normalized over `B'`'s second-hop
//!   neighbors with `A` excluded;
//! * combined: both sets renormalized by `Σ P1 + Σ P2`;
//! * temperature: `P ∝ exp(ln P / T)`, computed in the log domain.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SamplingError;
use crate::extraction::CanonicalKey;
use crate::graph::{KnowledgeGraph, Relation};

/// Which relations a walk may use at each hop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkSpec {
    pub first: Relation,
    pub second: Option<Relation>,
}

impl WalkSpec {
    /// Scenario → knowledge, widened through knowledge co-occurrence.
    pub const KNOWLEDGE: WalkSpec =
        WalkSpec { first: Relation::ScenarioKnowledge, second: Some(Relation::KnowledgeKnowledge) };
    /// Scenario → coding skill, widened through coding-skill co-occurrence.
    pub const CODING: WalkSpec = WalkSpec { first: Relation::ScenarioCoding, second: Some(Relation::CodingCoding) };
    /// Knowledge → its paired domain skills, one hop only.
    pub const SKILL: WalkSpec = WalkSpec { first: Relation::KnowledgeSkill, second: None };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionDistribution {
    pub origin: CanonicalKey,
    /// Sorted by target key; targets distinct, probabilities positive.
    pub support: Vec<(CanonicalKey, f64)>,
    pub temperature: Option<f64>,
}

impl TransitionDistribution {
    pub fn probability(&self, target: &CanonicalKey) -> f64 {
        self.support
            .binary_search_by(|(k, _)| k.cmp(target))
            .map(|i| self.support[i].1)
            .unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.support.iter().map(|(_, p)| p).sum()
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self.support.iter().filter(|(_, p)| *p > 0.0).map(|(_, p)| p * p.ln()).sum::<f64>()
    }

    /// Inverse-CDF draw using one uniform variate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (&CanonicalKey, f64) {
        let u: f64 = rng.gen::<f64>() * self.total();
        let mut acc = 0.0;
        for (k, p) in &self.support {
            acc += p;
            if u < acc {
                return (k, *p);
            }
        }
        let (k, p) = self.support.last().expect("distributions are never empty");
        (k, *p)
    }
}

fn first_step_map(
    g: &KnowledgeGraph,
    origin: &CanonicalKey,
    relation: Relation,
    exclude: Option<&CanonicalKey>,
) -> BTreeMap<CanonicalKey, f64> {
    let weights: Vec<(&CanonicalKey, u64)> =
        g.neighbors(origin, relation).filter(|(k, _)| Some(*k) != exclude).collect();
    let total: u64 = weights.iter().map(|(_, f)| f).sum();
    weights.into_iter().map(|(k, f)| (k.clone(), f as f64 / total as f64)).collect()
}

fn require_node(g: &KnowledgeGraph, origin: &CanonicalKey) -> Result<(), SamplingError> {
    if g.node(origin).is_none() {
        return Err(SamplingError::UnknownNode(origin.clone()));
    }
    Ok(())
}

pub fn first_step_distribution(
    g: &KnowledgeGraph,
    origin: &CanonicalKey,
    relation: Relation,
) -> Result<TransitionDistribution, SamplingError> {
    require_node(g, origin)?;
    let support: Vec<_> = first_step_map(g, origin, relation, None).into_iter().collect();
    if support.is_empty() {
        return Err(SamplingError::NoNeighbors { origin: origin.clone(), relation });
    }
    Ok(TransitionDistribution { origin: origin.clone(), support, temperature: None })
}

/// Nodes two hops away (through the walk's second relation) that are neither
/// the origin nor first-step neighbors.
pub fn second_step_neighbors(
    g: &KnowledgeGraph,
    origin: &CanonicalKey,
    walk: WalkSpec,
) -> Result<BTreeSet<CanonicalKey>, SamplingError> {
    require_node(g, origin)?;
    let Some(second) = walk.second else { return Ok(BTreeSet::new()) };
    let first: BTreeSet<&CanonicalKey> = g.neighbors(origin, walk.first).map(|(k, _)| k).collect();
    let mut out = BTreeSet::new();
    for b in &first {
        for (c, _) in g.neighbors(b, second) {
            if c != origin && !first.contains(c) {
                out.insert(c.clone());
            }
        }
    }
    Ok(out)
}

/// Unnormalized second-step mass for each node in `N2(origin)`.
pub fn second_step_distribution(
    g: &KnowledgeGraph,
    origin: &CanonicalKey,
    walk: WalkSpec,
) -> Result<BTreeMap<CanonicalKey, f64>, SamplingError> {
    let first = first_step_distribution(g, origin, walk.first)?;
    let Some(second) = walk.second else { return Ok(BTreeMap::new()) };
    let in_first: BTreeSet<&CanonicalKey> = first.support.iter().map(|(k, _)| k).collect();
    let mut mass: BTreeMap<CanonicalKey, f64> = BTreeMap::new();
    for (b, p_ab) in &first.support {
        for (c, p_bc) in first_step_map(g, b, second, Some(origin)) {
            if !in_first.contains(&c) {
                *mass.entry(c).or_insert(0.0) += p_ab * p_bc;
            }
        }
    }
    Ok(mass)
}

pub fn combined_distribution(
    g: &KnowledgeGraph,
    origin: &CanonicalKey,
    walk: WalkSpec,
) -> Result<TransitionDistribution, SamplingError> {
    let first = first_step_distribution(g, origin, walk.first)?;
    let second = second_step_distribution(g, origin, walk)?;
    let denominator = first.total() + second.values().sum::<f64>();
    let mut support: Vec<(CanonicalKey, f64)> =
        first.support.into_iter().chain(second).map(|(k, p)| (k, p / denominator)).collect();
    support.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(TransitionDistribution { origin: origin.clone(), support, temperature: None })
}

/// Reshapes `d` with `P ∝ exp(ln P / T)`. `T = 1` is the identity; larger `T`
/// flattens toward uniform and `T = ∞` is exactly uniform.
pub fn apply_temperature(d: &TransitionDistribution, temperature: f64) -> Result<TransitionDistribution, SamplingError> {
    if temperature.is_nan() || temperature <= 0.0 {
        return Err(SamplingError::InvalidTemperature(temperature));
    }
    if let Some((k, _)) = d.support.iter().find(|(_, p)| !(*p > 0.0)) {
        return Err(SamplingError::ZeroProbability(k.clone()));
    }
    let logits: Vec<f64> = d.support.iter().map(|(_, p)| p.ln() / temperature).collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok(TransitionDistribution {
        origin: d.origin.clone(),
        support: d.support.iter().zip(weights).map(|((k, _), w)| (k.clone(), w / total)).collect(),
        temperature: Some(temperature),
    })
}
