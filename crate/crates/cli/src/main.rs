use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};

use scogen_core::backend::{Backend, BackendConfig, BackendRegistry};
use scogen_core::curation::{curate, CurationConfig, MinHashConfig, SeedDocument};
use scogen_core::extraction::{extract_all, ExtractedElements, ExtractionPolicy};
use scogen_core::graph::{build_graph, graph_stats, load_graph, save_graph};
use scogen_core::jsonl::{read_jsonl, write_jsonl};
use scogen_core::pipeline::{self, load_section, parse_stages, validate_config, StageStatus};
use scogen_core::sampling::{sample_many, FeatureSet, SamplerConfig, StrategyDeps, StrategyRegistry};
use scogen_core::synthesis::{answer_all, export_sft, synthesize_all, ExportOptions, SynthesisRecord};

#[derive(Parser)]
#[command(name = "scogen", version, about = "Scenario-grounded code problem synthesis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter, deduplicate and subsample a raw corpus.
    Curate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        /// TOML with optional [curation] and [minhash] tables.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Extract scenario, knowledge and skills from curated documents.
    Extract {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// TOML with a [backend] table (or a bare backend table). Defaults to the mock.
        #[arg(long)]
        backend: Option<PathBuf>,
        /// Sidecar JSONL for skipped documents; defaults to `<out>.skips.jsonl`.
        #[arg(long)]
        skips: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        max_attempts: u32,
    },
    /// Build the knowledge graph from extracted elements.
    BuildGraph {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print node, edge and degree statistics as JSON.
    GraphStats {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Draw feature sets from the graph.
    Sample {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long, default_value_t = 1)]
        complexity: usize,
        #[arg(long, default_value_t = 3.0)]
        temperature: f64,
        #[arg(long, default_value = "random")]
        strategy: String,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Backend for the llm strategy.
        #[arg(long)]
        backend: Option<PathBuf>,
    },
    /// Generate one problem per feature set.
    Synthesize {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        backend: Option<PathBuf>,
    },
    /// Generate answers for synthesized problems.
    Answer {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        backend: Option<PathBuf>,
    },
    /// Write complete records as chat-format SFT pairs.
    ExportSft {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Drop records repeating an earlier problem text.
        #[arg(long)]
        dedup: bool,
    },
    /// Run the pipeline described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated subset, e.g. `curate,extract`.
        #[arg(long)]
        stages: Option<String>,
        /// Report what would run without running it.
        #[arg(long)]
        dry_run: bool,
    },
    /// Check a pipeline config and list every problem found.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn backend_config(path: Option<&Path>) -> Result<BackendConfig> {
    let Some(path) = path else { return Ok(BackendConfig::default()) };
    let mut cfg: BackendConfig = load_section(path, "backend").map_err(|e| anyhow!(e))?;
    cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    let errors = cfg.validate(&BackendRegistry::with_builtins());
    if !errors.is_empty() {
        bail!("invalid backend config:\n  {}", errors.join("\n  "));
    }
    Ok(cfg)
}

fn build_backend(cfg: &BackendConfig) -> Result<Arc<dyn Backend>> {
    Ok(BackendRegistry::with_builtins().build(cfg)?)
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run_command(command: Command) -> Result<()> {
    match command {
        Command::Curate { input, out, report, config, seed } => {
            let (cur, mh) = match &config {
                Some(path) => (
                    load_section::<CurationConfig>(path, "curation").map_err(|e| anyhow!(e))?,
                    load_section::<MinHashConfig>(path, "minhash").map_err(|e| anyhow!(e))?,
                ),
                None => Default::default(),
            };
            let docs: Vec<SeedDocument> = read_jsonl(&input)?;
            let (kept, rep) = curate(docs, &cur, &mh, seed)?;
            write_jsonl(&out, &kept)?;
            match report {
                Some(path) => std::fs::write(&path, serde_json::to_string_pretty(&rep)? + "\n")
                    .with_context(|| path.display().to_string())?,
                None => print_json(&rep)?,
            }
            log::info!("kept {} of {} documents", rep.survivors, rep.input);
        }
        Command::Extract { input, out, backend, skips, max_attempts } => {
            let cfg = backend_config(backend.as_deref())?;
            let docs: Vec<SeedDocument> = read_jsonl(&input)?;
            let policy = ExtractionPolicy { max_attempts };
            let (elements, skipped) = extract_all(&docs, build_backend(&cfg)?.as_ref(), &cfg, &policy);
            write_jsonl(&out, &elements)?;
            let skips = skips.unwrap_or_else(|| out.with_extension("skips.jsonl"));
            write_jsonl(&skips, &skipped)?;
            log::info!("extracted {} of {} documents ({} skipped)", elements.len(), docs.len(), skipped.len());
        }
        Command::BuildGraph { input, out } => {
            let elements: Vec<ExtractedElements> = read_jsonl(&input)?;
            let graph = build_graph(elements);
            save_graph(&graph, &out)?;
            print_json(&graph_stats(&graph))?;
        }
        Command::GraphStats { graph } => print_json(&graph_stats(&load_graph(&graph)?))?,
        Command::Sample { graph, complexity, temperature, strategy, count, seed, out, backend } => {
            let cfg = SamplerConfig { strategy, temperature, complexity, count, rng_seed: seed, ..Default::default() };
            let errors = cfg.validate();
            if !errors.is_empty() {
                bail!("invalid sampler settings:\n  {}", errors.join("\n  "));
            }
            let backend_cfg = backend_config(backend.as_deref())?;
            let deps = StrategyDeps {
                backend: if cfg.strategy == "llm" { Some(build_backend(&backend_cfg)?) } else { None },
                backend_config: backend_cfg.clone(),
            };
            let strategy = StrategyRegistry::with_builtins().build(&cfg.strategy, &deps)?;
            let graph = load_graph(&graph)?;
            let (sets, skips) = sample_many(&graph, strategy.as_ref(), &cfg, backend_cfg.parallelism)?;
            write_jsonl(&out, &sets)?;
            log::info!("sampled {} feature sets ({} skipped)", sets.len(), skips.len());
        }
        Command::Synthesize { features, out, backend } => {
            let cfg = backend_config(backend.as_deref())?;
            let sets: Vec<FeatureSet> = read_jsonl(&features)?;
            let records = synthesize_all(&sets, build_backend(&cfg)?.as_ref(), &cfg);
            write_jsonl(&out, &records)?;
        }
        Command::Answer { input, out, backend } => {
            let cfg = backend_config(backend.as_deref())?;
            let records: Vec<SynthesisRecord> = read_jsonl(&input)?;
            let answered = answer_all(&records, build_backend(&cfg)?.as_ref(), &cfg);
            write_jsonl(&out, &answered)?;
        }
        Command::ExportSft { input, out, dedup } => {
            let records: Vec<SynthesisRecord> = read_jsonl(&input)?;
            let n = export_sft(&records, &out, ExportOptions { dedup_problems: dedup })?;
            log::info!("exported {n} pairs");
        }
        Command::Run { .. } | Command::Validate { .. } => unreachable!("handled in main"),
    }
    Ok(())
}

fn run_pipeline(config: &Path, stages: Option<&str>, dry_run: bool) -> ExitCode {
    let stages = match stages.map(parse_stages).transpose() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match pipeline::run_file(config, stages.as_deref(), dry_run) {
        Ok(outcomes) => {
            for o in &outcomes {
                let status = match o.status {
                    StageStatus::Ran => "ran",
                    StageStatus::UpToDate => "up to date",
                    StageStatus::Planned => "would run",
                };
                let digest = o
                    .manifest
                    .as_ref()
                    .and_then(|m| m.output(o.stage.primary_output()))
                    .map(|a| a.sha256.as_str())
                    .unwrap_or("-");
                println!("{:<12} {:<11} {}", o.stage.name(), status, digest);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, stages, dry_run } => run_pipeline(&config, stages.as_deref(), dry_run),
        Command::Validate { config } => match validate_config(&config) {
            Ok(_) => {
                println!("ok");
                ExitCode::SUCCESS
            }
            Err(errors) => {
                for e in errors {
                    println!("error: {e}");
                }
                ExitCode::from(2)
            }
        },
        command => match run_command(command) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(3)
            }
        },
    }
}
