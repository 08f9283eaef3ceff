//! Stage orchestration: curate → extract → build-graph → sample → synthesize.

mod config;
mod manifest;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use crate::backend::{Backend, BackendRegistry};
use crate::curation::{curate, SeedDocument};
use crate::digest::{file_sha256, sha256_hex};
use crate::extraction::{extract_all, ExtractedElements};
use crate::graph::{build_graph, graph_stats, graph_to_json, load_graph};
use crate::jsonl::{read_jsonl, to_jsonl_bytes};
use crate::sampling::{sample_many, FeatureSet, StrategyDeps, StrategyRegistry};
use crate::synthesis::{answer_all, render_sft, synthesize_all, RecordStatus};

pub use config::{load_section, parse_stages, validate_config, PipelineConfig, Stage};
pub use manifest::{dir_digest, manifest_path, read_manifest, write_manifest, ArtifactDigest, StageManifest};

pub const CURATED: &str = "curated.jsonl";
pub const CURATION_REPORT: &str = "curation_report.json";
pub const ELEMENTS: &str = "elements.jsonl";
pub const EXTRACTION_SKIPS: &str = "extraction_skips.jsonl";
pub const GRAPH: &str = "graph.json";
pub const FEATURES: &str = "features.jsonl";
pub const SAMPLE_SKIPS: &str = "sample_skips.jsonl";
pub const RECORDS: &str = "records.jsonl";
pub const SFT: &str = "sft.jsonl";

impl Stage {
    /// The artifact downstream stages and golden digests refer to.
    pub fn primary_output(self) -> &'static str {
        match self {
            Stage::Curate => CURATED,
            Stage::Extract => ELEMENTS,
            Stage::BuildGraph => GRAPH,
            Stage::Sample => FEATURES,
            Stage::Synthesize => SFT,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("stage {stage} failed: {message}")]
    Stage { stage: Stage, message: String },
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Stage { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageStatus {
    Ran,
    /// Inputs, config and outputs unchanged since the recorded manifest.
    UpToDate,
    /// Dry run: would execute.
    Planned,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageOutcome {
    pub stage: Stage,
    pub status: StageStatus,
    pub manifest: Option<StageManifest>,
}

struct StageOutput {
    files: Vec<(&'static str, Vec<u8>)>,
    counts: BTreeMap<String, usize>,
}

fn hash_json(value: &serde_json::Value) -> String {
    sha256_hex(serde_json::to_string(value).expect("json value").as_bytes())
}

/// Backend settings that can change generated text.
fn backend_fingerprint(cfg: &PipelineConfig) -> serde_json::Value {
    let b = &cfg.backend;
    serde_json::json!({
        "kind": b.kind,
        "endpoint": b.endpoint,
        "model_id": b.model_id,
        "temperature": b.temperature,
        "max_output_tokens": b.max_output_tokens,
        "thinking_mode": b.thinking_mode,
        "mock_fallback": b.mock_fallback,
    })
}

fn uses_backend(stage: Stage, cfg: &PipelineConfig) -> bool {
    match stage {
        Stage::Extract | Stage::Synthesize => true,
        Stage::Sample => cfg.sampler.strategy == "llm",
        _ => false,
    }
}

fn config_hash(stage: Stage, cfg: &PipelineConfig) -> String {
    let mut value = match stage {
        Stage::Curate => serde_json::json!({"curation": cfg.curation, "minhash": cfg.minhash, "seed": cfg.seed}),
        Stage::Extract => serde_json::json!({"extraction": cfg.extraction}),
        Stage::BuildGraph => serde_json::json!({}),
        Stage::Sample => serde_json::json!({"sampler": cfg.sampler}),
        Stage::Synthesize => serde_json::json!({"export": cfg.export}),
    };
    if uses_backend(stage, cfg) {
        value["backend"] = backend_fingerprint(cfg);
    }
    value["stage"] = serde_json::json!(stage.name());
    hash_json(&value)
}

fn stage_inputs(stage: Stage, cfg: &PipelineConfig) -> Result<Vec<ArtifactDigest>, String> {
    let digest = |label: String, path: &Path| -> Result<ArtifactDigest, String> {
        let sha256 = file_sha256(path).map_err(|e| format!("input {}: {e}", path.display()))?;
        Ok(ArtifactDigest { path: label, sha256 })
    };
    let mut inputs = match stage {
        Stage::Curate => vec![digest("corpus".into(), &cfg.corpus)?],
        _ => {
            let prev = Stage::ALL[Stage::ALL.iter().position(|s| *s == stage).unwrap() - 1];
            let name = prev.primary_output();
            vec![digest(name.into(), &cfg.work_dir.join(name))?]
        }
    };
    if uses_backend(stage, cfg) && cfg.backend.kind == "mock" {
        if let Some(dir) = &cfg.backend.mock_dir {
            let sha256 = dir_digest(dir).map_err(|e| format!("mock_dir {}: {e}", dir.display()))?;
            inputs.push(ArtifactDigest { path: "mock-fixtures".into(), sha256 });
        }
    }
    Ok(inputs)
}

fn up_to_date(stage: Stage, cfg: &PipelineConfig, inputs: &[ArtifactDigest], hash: &str) -> Option<StageManifest> {
    let manifest = read_manifest(&cfg.work_dir, stage.name())?;
    if manifest.config_hash != hash || manifest.inputs != inputs {
        return None;
    }
    let intact = manifest
        .outputs
        .iter()
        .all(|a| file_sha256(&cfg.work_dir.join(&a.path)).is_ok_and(|d| d == a.sha256));
    intact.then_some(manifest)
}

fn build_backend(cfg: &PipelineConfig) -> Result<Arc<dyn Backend>, String> {
    BackendRegistry::with_builtins().build(&cfg.backend).map_err(|e| e.to_string())
}

fn counts<const N: usize>(pairs: [(&str, usize); N]) -> BTreeMap<String, usize> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn pretty(value: &impl Serialize) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    text.into_bytes()
}

fn execute(stage: Stage, cfg: &PipelineConfig) -> Result<StageOutput, String> {
    let work = &cfg.work_dir;
    match stage {
        Stage::Curate => {
            let docs: Vec<SeedDocument> = read_jsonl(&cfg.corpus).map_err(|e| e.to_string())?;
            let (kept, report) = curate(docs, &cfg.curation, &cfg.minhash, cfg.seed).map_err(|e| e.to_string())?;
            Ok(StageOutput {
                files: vec![(CURATED, to_jsonl_bytes(&kept)), (CURATION_REPORT, pretty(&report))],
                counts: counts([("input", report.input), ("survivors", report.survivors)]),
            })
        }
        Stage::Extract => {
            let docs: Vec<SeedDocument> = read_jsonl(&work.join(CURATED)).map_err(|e| e.to_string())?;
            let backend = build_backend(cfg)?;
            let (elements, skips) = extract_all(&docs, backend.as_ref(), &cfg.backend, &cfg.extraction);
            Ok(StageOutput {
                counts: counts([("documents", docs.len()), ("extracted", elements.len()), ("skipped", skips.len())]),
                files: vec![(ELEMENTS, to_jsonl_bytes(&elements)), (EXTRACTION_SKIPS, to_jsonl_bytes(&skips))],
            })
        }
        Stage::BuildGraph => {
            let elements: Vec<ExtractedElements> = read_jsonl(&work.join(ELEMENTS)).map_err(|e| e.to_string())?;
            let graph = build_graph(elements);
            graph.check_invariants().map_err(|e| e.to_string())?;
            let stats = graph_stats(&graph);
            Ok(StageOutput {
                files: vec![(GRAPH, graph_to_json(&graph).into_bytes())],
                counts: counts([
                    ("documents", stats.documents),
                    ("nodes", stats.nodes.values().sum()),
                    ("edges", stats.edges.values().sum()),
                ]),
            })
        }
        Stage::Sample => {
            let graph = load_graph(&work.join(GRAPH)).map_err(|e| e.to_string())?;
            let backend = if cfg.sampler.strategy == "llm" { Some(build_backend(cfg)?) } else { None };
            let deps = StrategyDeps { backend, backend_config: cfg.backend.clone() };
            let strategy =
                StrategyRegistry::with_builtins().build(&cfg.sampler.strategy, &deps).map_err(|e| e.to_string())?;
            let (sets, skips) =
                sample_many(&graph, strategy.as_ref(), &cfg.sampler, cfg.backend.parallelism).map_err(|e| e.to_string())?;
            Ok(StageOutput {
                counts: counts([("requested", cfg.sampler.count), ("sampled", sets.len()), ("skipped", skips.len())]),
                files: vec![(FEATURES, to_jsonl_bytes(&sets)), (SAMPLE_SKIPS, to_jsonl_bytes(&skips))],
            })
        }
        Stage::Synthesize => {
            let sets: Vec<FeatureSet> = read_jsonl(&work.join(FEATURES)).map_err(|e| e.to_string())?;
            let backend = build_backend(cfg)?;
            let records = synthesize_all(&sets, backend.as_ref(), &cfg.backend);
            let records = answer_all(&records, backend.as_ref(), &cfg.backend);
            let complete = records.iter().filter(|r| r.status == RecordStatus::Complete).count();
            let (sft, exported) = render_sft(&records, cfg.export);
            Ok(StageOutput {
                files: vec![(RECORDS, to_jsonl_bytes(&records)), (SFT, sft)],
                counts: counts([
                    ("feature_sets", sets.len()),
                    ("complete", complete),
                    ("failed", records.len() - complete),
                    ("exported", exported),
                ]),
            })
        }
    }
}

/// Writes every output as `<name>.partial`, then renames them all. A failure
/// midway leaves the `.partial` files behind for inspection.
fn commit_outputs(work: &Path, files: &[(&'static str, Vec<u8>)]) -> Result<Vec<ArtifactDigest>, String> {
    fs::create_dir_all(work).map_err(|e| format!("{}: {e}", work.display()))?;
    let mut digests = Vec::new();
    for (name, bytes) in files {
        let partial = work.join(format!("{name}.partial"));
        fs::write(&partial, bytes).map_err(|e| format!("{}: {e}", partial.display()))?;
        digests.push(ArtifactDigest { path: (*name).to_string(), sha256: sha256_hex(bytes) });
    }
    for (name, _) in files {
        let partial = work.join(format!("{name}.partial"));
        fs::rename(&partial, work.join(name)).map_err(|e| format!("{}: {e}", partial.display()))?;
    }
    Ok(digests)
}

fn run_stage(stage: Stage, cfg: &PipelineConfig, dry_run: bool) -> Result<StageOutcome, String> {
    let hash = config_hash(stage, cfg);
    let inputs = match stage_inputs(stage, cfg) {
        Ok(inputs) => inputs,
        // Upstream output not produced yet; fine when planning.
        Err(_) if dry_run => return Ok(StageOutcome { stage, status: StageStatus::Planned, manifest: None }),
        Err(e) => return Err(e),
    };
    if let Some(manifest) = up_to_date(stage, cfg, &inputs, &hash) {
        log::info!("{stage}: up to date, skipping");
        return Ok(StageOutcome { stage, status: StageStatus::UpToDate, manifest: Some(manifest) });
    }
    if dry_run {
        return Ok(StageOutcome { stage, status: StageStatus::Planned, manifest: None });
    }
    log::info!("{stage}: running");
    let start = Instant::now();
    let output = execute(stage, cfg)?;
    let outputs = commit_outputs(&cfg.work_dir, &output.files)?;
    let manifest = StageManifest {
        stage: stage.name().to_string(),
        config_hash: hash,
        inputs,
        outputs,
        counts: output.counts,
        wall_time_ms: start.elapsed().as_millis() as u64,
    };
    write_manifest(&cfg.work_dir, &manifest).map_err(|e| format!("manifest: {e}"))?;
    log::info!("{stage}: done in {} ms {:?}", manifest.wall_time_ms, manifest.counts);
    Ok(StageOutcome { stage, status: StageStatus::Ran, manifest: Some(manifest) })
}

/// Runs `stages` (or the config's own list) in dependency order. The first
/// failing stage aborts the run.
pub fn run(cfg: &PipelineConfig, stages: Option<&[Stage]>, dry_run: bool) -> Result<Vec<StageOutcome>, PipelineError> {
    let errors = cfg.validate();
    if !errors.is_empty() {
        return Err(PipelineError::Config(errors));
    }
    let mut plan = stages.unwrap_or(&cfg.stages).to_vec();
    plan.sort();
    plan.dedup();
    let mut outcomes = Vec::new();
    for stage in plan {
        let outcome = run_stage(stage, cfg, dry_run).map_err(|message| PipelineError::Stage { stage, message })?;
        outcomes.push(outcome);
    }
    Ok(outcomes)
}

/// Loads a config file and runs it.
pub fn run_file(path: &Path, stages: Option<&[Stage]>, dry_run: bool) -> Result<Vec<StageOutcome>, PipelineError> {
    let cfg = validate_config(path).map_err(PipelineError::Config)?;
    run(&cfg, stages, dry_run)
}
