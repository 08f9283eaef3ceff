//! Seed-document curation: length/garble/language filtering, exact and
//! near-duplicate removal, and stratified subsampling.

mod dedup;
mod filter;
mod minhash;
mod subsample;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

pub use dedup::{exact_dedup, near_dedup, normalize_for_exact, NearDedupOutcome};
pub use filter::{filter_document, garbled_ratio, is_latin_or_cjk_letter, latin_cjk_letter_ratio};
pub use minhash::{estimate_jaccard, shingles, MinHashConfig, MinHashSignature, MinHasher};
pub use subsample::{stratified_subsample, SubsampleOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    ForumDump,
    Notebook,
    Other,
}

#[derive(Deserialize)]
struct RawSeedDocument {
    id: String,
    source: Source,
    stratum: String,
    text: String,
}

/// One raw programming document. `char_count` is always derived from `text`
/// on ingest, whatever the input line says.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "RawSeedDocument")]
pub struct SeedDocument {
    pub id: String,
    pub source: Source,
    pub stratum: String,
    pub text: String,
    pub char_count: usize,
}

impl From<RawSeedDocument> for SeedDocument {
    fn from(raw: RawSeedDocument) -> Self {
        SeedDocument::new(raw.id, raw.source, raw.stratum, raw.text)
    }
}

impl SeedDocument {
    pub fn new(id: impl Into<String>, source: Source, stratum: impl Into<String>, text: impl Into<String>) -> Self {
        let text = text.into();
        let char_count = text.chars().count();
        SeedDocument { id: id.into(), source, stratum: stratum.into(), text, char_count }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurationConfig {
    pub min_chars: usize,
    pub max_chars: usize,
    /// Maximum tolerated fraction of control characters (other than `\n`,
    /// `\t`, `\r`) plus U+FFFD.
    pub garbled_max: f64,
    /// Minimum fraction of letters that must be Basic Latin or CJK.
    pub language_min_ratio: f64,
    /// Per-stratum document quotas. `None` disables subsampling.
    pub quotas: Option<BTreeMap<String, usize>>,
}

impl Default for CurationConfig {
    fn default() -> Self {
        CurationConfig {
            min_chars: 500,
            max_chars: 20_000,
            garbled_max: 0.01,
            language_min_ratio: 0.9,
            quotas: None,
        }
    }
}

impl CurationConfig {
    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if self.min_chars > self.max_chars {
            errors.push(format!("curation.min_chars ({}) exceeds max_chars ({})", self.min_chars, self.max_chars));
        }
        if !(0.0..=1.0).contains(&self.garbled_max) {
            errors.push(format!("curation.garbled_max {} outside [0, 1]", self.garbled_max));
        }
        if !(0.0..=1.0).contains(&self.language_min_ratio) {
            errors.push(format!("curation.language_min_ratio {} outside [0, 1]", self.language_min_ratio));
        }
        errors
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    TooShort,
    TooLong,
    Garbled,
    Language,
    ExactDup,
    NearDup,
    UnknownStratum,
    OverQuota,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Keep,
    Reject(RejectReason),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratumCounts {
    pub before: usize,
    pub after: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurationReport {
    pub input: usize,
    pub rejected: BTreeMap<RejectReason, usize>,
    pub survivors: usize,
    pub strata: BTreeMap<String, StratumCounts>,
    pub near_dup_clusters: Vec<Vec<String>>,
}

impl CurationReport {
    pub fn rejected_total(&self) -> usize {
        self.rejected.values().sum()
    }

    fn reject(&mut self, reason: RejectReason, n: usize) {
        if n > 0 {
            *self.rejected.entry(reason).or_default() += n;
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CurationError {
    #[error("duplicate document id {0:?}")]
    DuplicateId(String),
    #[error("invalid minhash config: {0}")]
    MinHash(String),
}

/// Runs filter → exact dedup → near dedup → (optional) stratified subsampling.
pub fn curate(
    docs: Vec<SeedDocument>,
    cfg: &CurationConfig,
    minhash: &MinHashConfig,
    seed: u64,
) -> Result<(Vec<SeedDocument>, CurationReport), CurationError> {
    let mut seen = HashSet::new();
    for doc in &docs {
        if !seen.insert(doc.id.as_str()) {
            return Err(CurationError::DuplicateId(doc.id.clone()));
        }
    }
    let hasher = MinHasher::new(minhash).map_err(CurationError::MinHash)?;

    let mut report = CurationReport { input: docs.len(), ..Default::default() };
    let mut kept = Vec::with_capacity(docs.len());
    for doc in docs {
        match filter_document(&doc, cfg) {
            Decision::Keep => kept.push(doc),
            Decision::Reject(reason) => report.reject(reason, 1),
        }
    }

    let before = kept.len();
    let kept = exact_dedup(kept);
    report.reject(RejectReason::ExactDup, before - kept.len());

    let before = kept.len();
    let NearDedupOutcome { survivors, clusters } = near_dedup(kept, &hasher);
    report.reject(RejectReason::NearDup, before - survivors.len());
    report.near_dup_clusters = clusters;

    let survivors = match &cfg.quotas {
        Some(quotas) => {
            let outcome = stratified_subsample(survivors, quotas, seed);
            report.reject(RejectReason::UnknownStratum, outcome.unknown_stratum);
            report.reject(RejectReason::OverQuota, outcome.over_quota);
            report.strata = outcome.strata;
            outcome.kept
        }
        None => {
            for doc in &survivors {
                let entry = report.strata.entry(doc.stratum.clone()).or_default();
                entry.before += 1;
                entry.after += 1;
            }
            survivors
        }
    };
    report.survivors = survivors.len();
    debug_assert_eq!(report.survivors + report.rejected_total(), report.input);
    Ok((survivors, report))
}
