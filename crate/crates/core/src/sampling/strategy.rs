use std::collections::BTreeMap;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use super::feature::{FeatureSet, SamplerConfig};
use super::llm::LlmSelectionStrategy;
use super::random::RandomStrategy;
use super::SamplingError;
use crate::backend::{Backend, BackendConfig};
use crate::extraction::CanonicalKey;
use crate::graph::KnowledgeGraph;

/// A way of turning one scenario into a feature set.
pub trait SamplingStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    /// `task` identifies the draw within a run and is recorded in the output.
    fn sample_set(
        &self,
        g: &KnowledgeGraph,
        scenario: &CanonicalKey,
        cfg: &SamplerConfig,
        task: u64,
        rng: &mut ChaCha8Rng,
    ) -> Result<FeatureSet, SamplingError>;
}

/// What a strategy may need at construction time.
#[derive(Clone, Default)]
pub struct StrategyDeps {
    pub backend: Option<Arc<dyn Backend>>,
    pub backend_config: BackendConfig,
}

pub type StrategyFactory = fn(&StrategyDeps) -> Result<Box<dyn SamplingStrategy>, SamplingError>;

pub struct StrategyRegistry {
    factories: BTreeMap<&'static str, StrategyFactory>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        StrategyRegistry { factories: BTreeMap::new() }
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register("random", |_| Ok(Box::new(RandomStrategy)));
        reg.register("llm", |deps| {
            let backend = deps.backend.clone().ok_or(SamplingError::MissingBackend("llm"))?;
            Ok(Box::new(LlmSelectionStrategy::new(backend, deps.backend_config.clone())))
        });
        reg
    }

    pub fn register(&mut self, name: &'static str, factory: StrategyFactory) {
        self.factories.insert(name, factory);
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }

    pub fn build(&self, name: &str, deps: &StrategyDeps) -> Result<Box<dyn SamplingStrategy>, SamplingError> {
        let factory = self.factories.get(name).ok_or_else(|| SamplingError::UnknownStrategy(name.to_string()))?;
        factory(deps)
    }
}
