//! Problem synthesis, answer generation and SFT export.

mod prompt;

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::backend::{bounded_map, Backend, BackendConfig, BackendError, GenerationRequest, TokenUsage};
use crate::extraction::CanonicalKey;
use crate::sampling::FeatureSet;

pub use prompt::{
    count_feature_blocks, render_features, render_synthesis_prompt, split_reply, PROBLEM_DELIMITER,
    SYNTHESIS_OUTPUT_FORMAT, SYNTHESIS_TEMPLATE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordStatus {
    /// Problem generated, answer pending.
    ProblemReady,
    Complete,
    Failed,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BackendMeta {
    pub model_id: String,
    pub problem_usage: TokenUsage,
    pub answer_usage: TokenUsage,
    pub problem_attempts: u32,
    pub answer_attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisRecord {
    pub id: String,
    pub scenario: CanonicalKey,
    pub features: FeatureSet,
    pub synthesis_prompt: String,
    pub raw_reply: String,
    pub problem_text: String,
    /// False when the reply lacked the problem delimiter and was kept whole.
    pub delimiter_found: bool,
    pub answer_text: String,
    pub status: RecordStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub backend: BackendMeta,
}

#[derive(Debug, thiserror::Error)]
pub enum SynthesisError {
    #[error("record {id} is not answerable: {reason}")]
    Precondition { id: String, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn fail(rec: &mut SynthesisRecord, err: &BackendError) {
    log::warn!("{}: backend failure: {err}", rec.id);
    rec.status = RecordStatus::Failed;
    rec.error = Some(err.to_string());
}

pub fn synthesize_problem(fs: &FeatureSet, backend: &dyn Backend, cfg: &BackendConfig) -> SynthesisRecord {
    let prompt = render_synthesis_prompt(fs);
    let mut rec = SynthesisRecord {
        id: fs.id.clone(),
        scenario: fs.scenario.clone(),
        features: fs.clone(),
        synthesis_prompt: prompt.clone(),
        raw_reply: String::new(),
        problem_text: String::new(),
        delimiter_found: false,
        answer_text: String::new(),
        status: RecordStatus::ProblemReady,
        error: None,
        backend: BackendMeta { model_id: cfg.model_id.clone(), ..BackendMeta::default() },
    };
    match backend.complete(&GenerationRequest::user(cfg, prompt)) {
        Ok(res) => {
            let (problem, found) = split_reply(&res.text);
            if !found {
                log::warn!("{}: reply has no problem delimiter, keeping it whole", rec.id);
            }
            rec.raw_reply = res.text;
            rec.problem_text = problem;
            rec.delimiter_found = found;
            rec.backend.problem_usage = res.usage;
            rec.backend.problem_attempts = res.attempts;
            if rec.problem_text.is_empty() {
                rec.status = RecordStatus::Failed;
                rec.error = Some("empty problem text".into());
            }
        }
        Err(e) => fail(&mut rec, &e),
    }
    rec
}

/// Fills `answer_text`. The problem is sent alone as the user turn.
pub fn generate_answer(
    rec: &SynthesisRecord,
    backend: &dyn Backend,
    cfg: &BackendConfig,
) -> Result<SynthesisRecord, SynthesisError> {
    if rec.status == RecordStatus::Failed || rec.problem_text.is_empty() {
        return Err(SynthesisError::Precondition { id: rec.id.clone(), reason: "no problem text".into() });
    }
    let mut out = rec.clone();
    match backend.complete(&GenerationRequest::user(cfg, rec.problem_text.clone())) {
        Ok(res) => {
            out.answer_text = res.text;
            out.backend.answer_usage = res.usage;
            out.backend.answer_attempts = res.attempts;
            out.status = RecordStatus::Complete;
            out.error = None;
        }
        Err(e) => fail(&mut out, &e),
    }
    Ok(out)
}

pub fn synthesize_all(sets: &[FeatureSet], backend: &dyn Backend, cfg: &BackendConfig) -> Vec<SynthesisRecord> {
    bounded_map(sets, cfg.parallelism, |_, fs| synthesize_problem(fs, backend, cfg))
}

/// Answers every record positionally. Records that cannot be answered pass
/// through unchanged.
pub fn answer_all(records: &[SynthesisRecord], backend: &dyn Backend, cfg: &BackendConfig) -> Vec<SynthesisRecord> {
    bounded_map(records, cfg.parallelism, |_, rec| match rec.status {
        RecordStatus::ProblemReady => generate_answer(rec, backend, cfg).unwrap_or_else(|e| {
            log::warn!("{e}");
            rec.clone()
        }),
        _ => rec.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftPair {
    pub messages: Vec<Message>,
    pub provenance: String,
}

impl SftPair {
    pub fn from_record(rec: &SynthesisRecord) -> Self {
        SftPair {
            messages: vec![
                Message { role: Role::User, content: rec.problem_text.clone() },
                Message { role: Role::Assistant, content: rec.answer_text.clone() },
            ],
            provenance: rec.id.clone(),
        }
    }

    pub fn is_well_formed(&self) -> bool {
        matches!(self.messages.as_slice(), [u, a] if u.role == Role::User && a.role == Role::Assistant)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportOptions {
    /// Drop records whose problem text exactly repeats an earlier one.
    pub dedup_problems: bool,
}

/// The JSON Lines bytes [`export_sft`] writes, and the number of pairs.
pub fn render_sft(records: &[SynthesisRecord], opts: ExportOptions) -> (Vec<u8>, usize) {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut count = 0;
    for rec in records {
        if rec.status != RecordStatus::Complete {
            log::info!("{}: not exported ({:?})", rec.id, rec.status);
            continue;
        }
        if opts.dedup_problems && !seen.insert(rec.problem_text.as_str()) {
            log::info!("{}: duplicate problem dropped", rec.id);
            continue;
        }
        serde_json::to_writer(&mut out, &SftPair::from_record(rec)).expect("serializable pair");
        out.push(b'\n');
        count += 1;
    }
    (out, count)
}

/// Writes complete records as SFT pairs, one JSON object per line.
pub fn export_sft(records: &[SynthesisRecord], path: &Path, opts: ExportOptions) -> Result<usize, SynthesisError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let (bytes, count) = render_sft(records, opts);
    fs::write(path, bytes)?;
    Ok(count)
}
