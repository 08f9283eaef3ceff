use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::transition::{apply_temperature, combined_distribution, first_step_distribution, TransitionDistribution, WalkSpec};
use super::SamplingError;
use crate::extraction::{CanonicalKey, NodeKind};
use crate::graph::{KnowledgeGraph, Relation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub strategy: String,
    pub temperature: f64,
    /// Features per problem.
    pub complexity: usize,
    /// Feature sets to draw.
    pub count: usize,
    /// Duplicate-triple redraws tolerated per feature set.
    pub max_resample_attempts: u32,
    /// Selection requests per feature set before falling back to random.
    pub selection_attempts: u32,
    pub rng_seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            strategy: "random".into(),
            temperature: 3.0,
            complexity: 1,
            count: 100,
            max_resample_attempts: 20,
            selection_attempts: 3,
            rng_seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if self.temperature.is_nan() || self.temperature <= 0.0 {
            errors.push(format!("sampler.temperature must be > 0 (got {})", self.temperature));
        }
        if self.complexity < 1 {
            errors.push(format!("sampler.complexity must be >= 1 (got {})", self.complexity));
        }
        if self.complexity > super::CANDIDATE_COUNT && self.strategy == "llm" {
            errors.push(format!(
                "sampler.complexity {} exceeds the {} candidates offered to the llm strategy",
                self.complexity,
                super::CANDIDATE_COUNT
            ));
        }
        if self.selection_attempts < 1 {
            errors.push("sampler.selection_attempts must be >= 1".into());
        }
        errors
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureElement {
    pub node: CanonicalKey,
    pub name: String,
    pub usage: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementRole {
    Knowledge,
    Skill,
    CodingSkill,
}

/// How one element was reached from its origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopTrace {
    pub role: ElementRole,
    pub from: CanonicalKey,
    pub to: CanonicalKey,
    /// 1 for a direct neighbor, 2 for a second-step neighbor.
    pub hops: u8,
    /// Intermediate nodes connecting `from` and `to` (second-step only).
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub via: Vec<CanonicalKey>,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feature {
    pub knowledge: FeatureElement,
    pub skill: Option<FeatureElement>,
    pub coding_skill: FeatureElement,
    pub provenance: Vec<HopTrace>,
}

pub type TripleKey = (CanonicalKey, Option<CanonicalKey>, CanonicalKey);

impl Feature {
    pub fn triple(&self) -> TripleKey {
        (
            self.knowledge.node.clone(),
            self.skill.as_ref().map(|s| s.node.clone()),
            self.coding_skill.node.clone(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerSnapshot {
    pub strategy: String,
    pub temperature: f64,
    pub complexity: usize,
    pub seed: u64,
    pub task: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub id: String,
    pub scenario: CanonicalKey,
    pub scenario_name: String,
    pub features: Vec<Feature>,
    pub config: SamplerSnapshot,
    /// Strategy that actually produced the features (differs from
    /// `config.strategy` after a fallback).
    pub produced_by: String,
}

impl FeatureSet {
    pub fn element_count(&self) -> usize {
        self.features.iter().map(|f| 2 + usize::from(f.skill.is_some())).sum()
    }
}

/// Precomputed distributions for one scenario at one temperature.
pub struct ScenarioSampler<'g> {
    graph: &'g KnowledgeGraph,
    scenario: CanonicalKey,
    knowledge: TransitionDistribution,
    coding: TransitionDistribution,
}

/// A scenario is eligible when it has at least one AS-DK and one AS-CS edge.
pub fn check_eligible(g: &KnowledgeGraph, scenario: &CanonicalKey) -> Result<(), SamplingError> {
    let ineligible = |reason: &str| SamplingError::IneligibleScenario { scenario: scenario.clone(), reason: reason.into() };
    if scenario.kind != NodeKind::Scenario {
        return Err(ineligible("not an application scenario"));
    }
    if g.node(scenario).is_none() {
        return Err(SamplingError::UnknownNode(scenario.clone()));
    }
    if g.neighbors(scenario, Relation::ScenarioKnowledge).next().is_none() {
        return Err(ineligible("no domain knowledge edges"));
    }
    if g.neighbors(scenario, Relation::ScenarioCoding).next().is_none() {
        return Err(ineligible("no coding skill edges"));
    }
    Ok(())
}

impl<'g> ScenarioSampler<'g> {
    pub fn new(g: &'g KnowledgeGraph, scenario: &CanonicalKey, temperature: f64) -> Result<Self, SamplingError> {
        check_eligible(g, scenario)?;
        let knowledge = apply_temperature(&combined_distribution(g, scenario, WalkSpec::KNOWLEDGE)?, temperature)?;
        let coding = apply_temperature(&combined_distribution(g, scenario, WalkSpec::CODING)?, temperature)?;
        Ok(ScenarioSampler { graph: g, scenario: scenario.clone(), knowledge, coding })
    }

    pub fn scenario(&self) -> &CanonicalKey {
        &self.scenario
    }

    pub fn knowledge_distribution(&self) -> &TransitionDistribution {
        &self.knowledge
    }

    pub fn coding_distribution(&self) -> &TransitionDistribution {
        &self.coding
    }

    /// Number of distinct (DK, DS-or-NA, CS) triples this scenario can yield.
    pub fn distinct_triples(&self) -> usize {
        let skill_options: usize = self
            .knowledge
            .support
            .iter()
            .map(|(dk, _)| self.graph.neighbors(dk, Relation::KnowledgeSkill).count().max(1))
            .sum();
        skill_options * self.coding.len()
    }

    fn element<R: Rng + ?Sized>(&self, node: &CanonicalKey, rng: &mut R) -> FeatureElement {
        let n = self.graph.node(node).expect("sampled nodes exist");
        let usage = if n.usages.is_empty() {
            String::new()
        } else {
            n.usages.iter().nth(rng.gen_range(0..n.usages.len())).expect("in range").clone()
        };
        FeatureElement { node: node.clone(), name: n.display_name.clone(), usage }
    }

    fn trace(&self, role: ElementRole, walk: WalkSpec, to: &CanonicalKey, probability: f64) -> HopTrace {
        let direct = self.graph.frequency(&self.scenario, to) > 0;
        let via = match (direct, walk.second) {
            (false, Some(second)) => self
                .graph
                .neighbors(&self.scenario, walk.first)
                .map(|(b, _)| b)
                .filter(|b| self.graph.neighbors(b, second).any(|(c, _)| c == to))
                .cloned()
                .collect(),
            _ => Vec::new(),
        };
        HopTrace {
            role,
            from: self.scenario.clone(),
            to: to.clone(),
            hops: if direct { 1 } else { 2 },
            via,
            probability,
        }
    }

    /// Draws one feature. The RNG is consumed in a fixed order: knowledge,
    /// skill, coding skill, then one usage per chosen element.
    pub fn sample_feature<R: Rng + ?Sized>(&self, rng: &mut R) -> Feature {
        let (dk, p_dk) = self.knowledge.sample(rng);
        let skill = match first_step_distribution(self.graph, dk, Relation::KnowledgeSkill) {
            Ok(d) => {
                let (ds, p) = d.sample(rng);
                Some((ds.clone(), p))
            }
            Err(_) => None,
        };
        let (cs, p_cs) = self.coding.sample(rng);

        let mut provenance = vec![self.trace(ElementRole::Knowledge, WalkSpec::KNOWLEDGE, dk, p_dk)];
        if let Some((ds, p)) = &skill {
            provenance.push(HopTrace {
                role: ElementRole::Skill,
                from: dk.clone(),
                to: ds.clone(),
                hops: 1,
                via: Vec::new(),
                probability: *p,
            });
        }
        provenance.push(self.trace(ElementRole::CodingSkill, WalkSpec::CODING, cs, p_cs));

        let knowledge = self.element(dk, rng);
        let skill = skill.map(|(ds, _)| self.element(&ds, rng));
        let coding_skill = self.element(cs, rng);
        Feature { knowledge, skill, coding_skill, provenance }
    }

    /// Collects `complexity` features with pairwise-distinct triples.
    pub fn sample_distinct<R: Rng + ?Sized>(
        &self,
        complexity: usize,
        max_resample_attempts: u32,
        rng: &mut R,
    ) -> Result<Vec<Feature>, SamplingError> {
        let available = self.distinct_triples();
        let insufficient = || SamplingError::InsufficientDiversity {
            scenario: self.scenario.clone(),
            wanted: complexity,
            available,
        };
        if available < complexity {
            return Err(insufficient());
        }
        let mut seen: BTreeSet<TripleKey> = BTreeSet::new();
        let mut features = Vec::with_capacity(complexity);
        let mut redraws = 0;
        while features.len() < complexity {
            let f = self.sample_feature(rng);
            if seen.insert(f.triple()) {
                features.push(f);
            } else if redraws >= max_resample_attempts {
                return Err(insufficient());
            } else {
                redraws += 1;
            }
        }
        Ok(features)
    }
}

/// One feature for `scenario`.
pub fn sample_feature<R: Rng + ?Sized>(
    g: &KnowledgeGraph,
    scenario: &CanonicalKey,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<Feature, SamplingError> {
    Ok(ScenarioSampler::new(g, scenario, cfg.temperature)?.sample_feature(rng))
}
