use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::backend::{BackendConfig, BackendRegistry};
use crate::curation::{CurationConfig, MinHashConfig};
use crate::extraction::ExtractionPolicy;
use crate::sampling::{SamplerConfig, StrategyRegistry};
use crate::synthesis::ExportOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Curate,
    Extract,
    BuildGraph,
    Sample,
    Synthesize,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Curate, Stage::Extract, Stage::BuildGraph, Stage::Sample, Stage::Synthesize];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Curate => "curate",
            Stage::Extract => "extract",
            Stage::BuildGraph => "build-graph",
            Stage::Sample => "sample",
            Stage::Synthesize => "synthesize",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s.trim())
            .ok_or_else(|| format!("unknown stage {s:?} (expected one of curate, extract, build-graph, sample, synthesize)"))
    }
}

/// Parses a comma-separated stage list into dependency order.
pub fn parse_stages(list: &str) -> Result<Vec<Stage>, String> {
    let mut stages = list.split(',').filter(|s| !s.trim().is_empty()).map(Stage::from_str).collect::<Result<Vec<_>, _>>()?;
    stages.sort();
    stages.dedup();
    Ok(stages)
}

fn default_work_dir() -> PathBuf {
    PathBuf::from("work")
}

fn default_stages() -> Vec<Stage> {
    Stage::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Root of every random stream in the run.
    pub seed: u64,
    /// Raw corpus, JSON Lines of seed documents.
    pub corpus: PathBuf,
    #[serde(default = "default_work_dir")]
    pub work_dir: PathBuf,
    #[serde(default = "default_stages")]
    pub stages: Vec<Stage>,
    #[serde(default)]
    pub curation: CurationConfig,
    #[serde(default)]
    pub minhash: MinHashConfig,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default)]
    pub extraction: ExtractionPolicy,
    #[serde(default)]
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub export: ExportOptions,
}

impl PipelineConfig {
    /// Makes relative paths relative to `base` (the config file's directory)
    /// and hands the global seed to the sampler.
    pub fn resolve(&mut self, base: &Path) {
        if self.corpus.is_relative() {
            self.corpus = base.join(&self.corpus);
        }
        if self.work_dir.is_relative() {
            self.work_dir = base.join(&self.work_dir);
        }
        self.backend.resolve_paths(base);
        self.sampler.rng_seed = self.seed;
    }

    /// Every structural and range problem, not just the first.
    pub fn validate(&self) -> Vec<String> {
        let mut errors = self.curation.validate();
        if let Err(e) = self.minhash.validate() {
            errors.push(format!("minhash: {e}"));
        }
        if self.extraction.max_attempts < 1 {
            errors.push("extraction.max_attempts must be >= 1".into());
        }
        errors.extend(self.sampler.validate());
        let strategies = StrategyRegistry::with_builtins();
        if !strategies.contains(&self.sampler.strategy) {
            errors.push(format!(
                "sampler.strategy {:?} is not registered (known: {})",
                self.sampler.strategy,
                strategies.names().join(", ")
            ));
        }
        let needs_backend = self.stages.iter().any(|s| matches!(s, Stage::Extract | Stage::Synthesize))
            || (self.stages.contains(&Stage::Sample) && self.sampler.strategy == "llm");
        if needs_backend {
            errors.extend(self.backend.validate(&BackendRegistry::with_builtins()));
        } else if self.backend.parallelism < 1 {
            errors.push("backend.parallelism must be >= 1".into());
        }
        if self.stages.is_empty() {
            errors.push("stages is empty".into());
        }
        errors
    }
}

/// Reads, resolves and validates a config file, reporting all errors at once.
pub fn validate_config(path: &Path) -> Result<PipelineConfig, Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| vec![format!("{}: {e}", path.display())])?;
    let mut cfg: PipelineConfig = toml::from_str(&text).map_err(|e| vec![format!("{}: {e}", path.display())])?;
    cfg.stages.sort();
    cfg.stages.dedup();
    cfg.resolve(path.parent().unwrap_or(Path::new(".")));
    let errors = cfg.validate();
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(errors)
    }
}

/// Reads one table (e.g. `backend`) from a TOML file. A file without that
/// table is read as the table itself, so both a full pipeline config and a
/// standalone section file work.
pub fn load_section<T: serde::de::DeserializeOwned>(path: &Path, key: &str) -> Result<T, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut table: toml::Table = toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let section = match table.remove(key) {
        Some(v) => v,
        // A pipeline config that leaves the section at its defaults.
        None if table.contains_key("corpus") => toml::Value::Table(toml::Table::new()),
        None => toml::Value::Table(table),
    };
    section.try_into().map_err(|e| format!("{}: [{key}]: {e}", path.display()))
}
