//! Feature sampling over the knowledge graph.

mod feature;
mod llm;
mod random;
mod strategy;
mod transition;

use serde::{Deserialize, Serialize};

use crate::backend::bounded_map;
use crate::extraction::{CanonicalKey, NodeKind};
use crate::graph::{KnowledgeGraph, Relation};
use crate::seeding::derive_rng;

pub use feature::{
    check_eligible, sample_feature, ElementRole, Feature, FeatureElement, FeatureSet, HopTrace, SamplerConfig,
    SamplerSnapshot, ScenarioSampler, TripleKey,
};
pub use llm::{parse_selection, render_selection_prompt, LlmSelectionStrategy, Selection, SELECTION_OUTPUT_FORMAT};
pub use random::{sample_feature_set_random, RandomStrategy};
pub use strategy::{SamplingStrategy, StrategyDeps, StrategyFactory, StrategyRegistry};
pub use transition::{
    apply_temperature, combined_distribution, first_step_distribution, second_step_distribution,
    second_step_neighbors, TransitionDistribution, WalkSpec,
};

/// Candidate features offered to the model by the llm strategy.
pub const CANDIDATE_COUNT: usize = 10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SamplingError {
    #[error("unknown node {0}")]
    UnknownNode(CanonicalKey),
    #[error("{origin} has no {relation} neighbors")]
    NoNeighbors { origin: CanonicalKey, relation: Relation },
    #[error("temperature must be positive (got {0})")]
    InvalidTemperature(f64),
    #[error("zero probability for {0}")]
    ZeroProbability(CanonicalKey),
    #[error("scenario {scenario} is ineligible: {reason}")]
    IneligibleScenario { scenario: CanonicalKey, reason: String },
    #[error("scenario {scenario} supports {available} distinct features, {wanted} requested")]
    InsufficientDiversity { scenario: CanonicalKey, wanted: usize, available: usize },
    #[error("unknown sampling strategy {0:?}")]
    UnknownStrategy(String),
    #[error("strategy {0:?} needs a backend")]
    MissingBackend(&'static str),
    #[error("graph has no eligible scenarios")]
    NoEligibleScenarios,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSkip {
    pub task: u64,
    pub scenario: CanonicalKey,
    pub reason: String,
}

/// Scenarios with at least one knowledge and one coding-skill edge, in key order.
pub fn eligible_scenarios(g: &KnowledgeGraph) -> Vec<CanonicalKey> {
    g.nodes_of(NodeKind::Scenario).map(|n| n.id.clone()).filter(|s| check_eligible(g, s).is_ok()).collect()
}

/// Draws `cfg.count` feature sets. Task `i` picks its scenario uniformly from
/// the eligible ones with stream `(seed, "scenario-pick", i)` and samples with
/// stream `(seed, scenario key, i)`, so output is independent of `parallelism`.
pub fn sample_many(
    g: &KnowledgeGraph,
    strategy: &dyn SamplingStrategy,
    cfg: &SamplerConfig,
    parallelism: usize,
) -> Result<(Vec<FeatureSet>, Vec<SampleSkip>), SamplingError> {
    let scenarios = eligible_scenarios(g);
    if scenarios.is_empty() {
        return Err(SamplingError::NoEligibleScenarios);
    }
    let tasks: Vec<u64> = (0..cfg.count as u64).collect();
    let outcomes = bounded_map(&tasks, parallelism, |_, &task| {
        use rand::Rng;
        let pick = derive_rng(cfg.rng_seed, "scenario-pick", task).gen_range(0..scenarios.len());
        let scenario = &scenarios[pick];
        let mut rng = derive_rng(cfg.rng_seed, &scenario.to_string(), task);
        strategy
            .sample_set(g, scenario, cfg, task, &mut rng)
            .map_err(|e| SampleSkip { task, scenario: scenario.clone(), reason: e.to_string() })
    });
    let mut sets = Vec::new();
    let mut skips = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(set) => sets.push(set),
            Err(skip) => {
                log::info!("task {} ({}) skipped: {}", skip.task, skip.scenario, skip.reason);
                skips.push(skip);
            }
        }
    }
    Ok((sets, skips))
}
