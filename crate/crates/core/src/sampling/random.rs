use rand_chacha::ChaCha8Rng;

use super::feature::{FeatureSet, SamplerConfig, SamplerSnapshot, ScenarioSampler};
use super::strategy::SamplingStrategy;
use super::SamplingError;
use crate::extraction::CanonicalKey;
use crate::graph::KnowledgeGraph;

/// Repeats probability-guided walks from the scenario until `complexity`
/// distinct features are collected.
pub struct RandomStrategy;

pub(crate) fn snapshot(cfg: &SamplerConfig, task: u64) -> SamplerSnapshot {
    SamplerSnapshot {
        strategy: cfg.strategy.clone(),
        temperature: cfg.temperature,
        complexity: cfg.complexity,
        seed: cfg.rng_seed,
        task,
    }
}

pub(crate) fn feature_set_id(task: u64) -> String {
    format!("fs-{task:06}")
}

pub fn sample_feature_set_random(
    g: &KnowledgeGraph,
    scenario: &CanonicalKey,
    cfg: &SamplerConfig,
    task: u64,
    rng: &mut ChaCha8Rng,
) -> Result<FeatureSet, SamplingError> {
    let sampler = ScenarioSampler::new(g, scenario, cfg.temperature)?;
    let features = sampler.sample_distinct(cfg.complexity, cfg.max_resample_attempts, rng)?;
    Ok(FeatureSet {
        id: feature_set_id(task),
        scenario: scenario.clone(),
        scenario_name: g.node(scenario).map(|n| n.display_name.clone()).unwrap_or_default(),
        features,
        config: snapshot(cfg, task),
        produced_by: "random".into(),
    })
}

impl SamplingStrategy for RandomStrategy {
    fn name(&self) -> &'static str {
        "random"
    }

    fn sample_set(
        &self,
        g: &KnowledgeGraph,
        scenario: &CanonicalKey,
        cfg: &SamplerConfig,
        task: u64,
        rng: &mut ChaCha8Rng,
    ) -> Result<FeatureSet, SamplingError> {
        sample_feature_set_random(g, scenario, cfg, task, rng)
    }
}
