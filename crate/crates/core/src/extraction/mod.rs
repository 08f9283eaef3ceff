//! Scenario / knowledge / skill extraction from curated documents.

mod parse;
mod prompt;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::backend::{bounded_map, Backend, BackendConfig, BackendError, GenerationRequest};
use crate::curation::SeedDocument;

pub use parse::parse_extraction_output;
pub use prompt::{render_extraction_prompt, EXTRACTION_OUTPUT_FORMAT};

/// A named element with one detailed-usage string.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Element {
    pub name: String,
    pub usage: String,
}

impl Element {
    pub fn new(name: impl Into<String>, usage: impl Into<String>) -> Self {
        Element { name: name.into(), usage: usage.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodingCategory {
    ProblemSolving = 0,
    ToolsFrameworks = 1,
    AlgorithmsDataStructures = 2,
}

impl CodingCategory {
    pub const ALL: [CodingCategory; 3] =
        [CodingCategory::ProblemSolving, CodingCategory::ToolsFrameworks, CodingCategory::AlgorithmsDataStructures];

    pub fn heading(self) -> &'static str {
        match self {
            CodingCategory::ProblemSolving => "Problem-solving and Design Thinking",
            CodingCategory::ToolsFrameworks => "Tools and Frameworks",
            CodingCategory::AlgorithmsDataStructures => "Algorithms and Data Structures",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodingSkills {
    pub problem_solving: Option<Element>,
    pub tools_frameworks: Option<Element>,
    pub algorithms_data_structures: Option<Element>,
}

impl CodingSkills {
    pub fn get(&self, cat: CodingCategory) -> Option<&Element> {
        match cat {
            CodingCategory::ProblemSolving => self.problem_solving.as_ref(),
            CodingCategory::ToolsFrameworks => self.tools_frameworks.as_ref(),
            CodingCategory::AlgorithmsDataStructures => self.algorithms_data_structures.as_ref(),
        }
    }

    pub fn get_mut(&mut self, cat: CodingCategory) -> &mut Option<Element> {
        match cat {
            CodingCategory::ProblemSolving => &mut self.problem_solving,
            CodingCategory::ToolsFrameworks => &mut self.tools_frameworks,
            CodingCategory::AlgorithmsDataStructures => &mut self.algorithms_data_structures,
        }
    }

    /// Present coding skills in category order.
    pub fn present(&self) -> impl Iterator<Item = &Element> {
        CodingCategory::ALL.into_iter().filter_map(|c| self.get(c))
    }
}

/// Elements extracted from one document. `skills[i]` is the domain skill
/// paired with `knowledge[i]`, or `None` for NA.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedElements {
    pub doc_id: String,
    pub scenario: String,
    pub knowledge: Vec<Element>,
    pub skills: Vec<Option<Element>>,
    pub coding_skills: CodingSkills,
}

impl ExtractedElements {
    pub fn validate(&self) -> Result<(), String> {
        if self.scenario.trim().is_empty() {
            return Err("scenario is empty".into());
        }
        if !(1..=3).contains(&self.knowledge.len()) {
            return Err(format!("expected 1 to 3 domain knowledge entries, found {}", self.knowledge.len()));
        }
        if self.skills.len() != self.knowledge.len() {
            return Err(format!(
                "{} domain skills for {} knowledge entries",
                self.skills.len(),
                self.knowledge.len()
            ));
        }
        let all = self
            .knowledge
            .iter()
            .chain(self.skills.iter().flatten())
            .chain(self.coding_skills.present());
        for el in all {
            if el.name.trim().is_empty() {
                return Err("element with empty name".into());
            }
            if el.usage.trim().is_empty() {
                return Err(format!("element {:?} has no usage", el.name));
            }
        }
        Ok(())
    }

    /// Renders in the reply grammar accepted by [`parse_extraction_output`].
    pub fn to_reply_text(&self) -> String {
        let mut out = format!("Application Scenario:\n{}\n\nDomain Knowledge:\n", self.scenario);
        for (i, k) in self.knowledge.iter().enumerate() {
            out.push_str(&format!("{}. {}: {}\n", i + 1, k.name, k.usage));
        }
        out.push_str("\nDomain Skill:\n");
        for (i, (k, s)) in self.knowledge.iter().zip(&self.skills).enumerate() {
            out.push_str(&format!("{}. {}:\n", i + 1, k.name));
            match s {
                Some(s) => out.push_str(&format!("{}.1. {}: {}\n", i + 1, s.name, s.usage)),
                None => out.push_str(&format!("{}.1. NA\n", i + 1)),
            }
        }
        out.push_str("\nCoding Skill:\n");
        for cat in CodingCategory::ALL {
            out.push_str(cat.heading());
            out.push_str(":\n");
            match self.coding_skills.get(cat) {
                Some(el) => out.push_str(&format!("1. {}: {}\n", el.name, el.usage)),
                None => out.push_str("1. NA\n"),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
#[error("{message}{}", match (.line, .text) { (Some(l), Some(t)) => format!(" (line {l}: {t:?})"), _ => String::new() })]
pub struct ParseFailure {
    pub line: Option<usize>,
    pub text: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    #[serde(rename = "AS")]
    Scenario,
    #[serde(rename = "DK")]
    Knowledge,
    #[serde(rename = "DS")]
    Skill,
    #[serde(rename = "CS")]
    Coding,
}

impl NodeKind {
    pub const ALL: [NodeKind; 4] = [NodeKind::Scenario, NodeKind::Knowledge, NodeKind::Skill, NodeKind::Coding];

    pub fn code(self) -> &'static str {
        match self {
            NodeKind::Scenario => "AS",
            NodeKind::Knowledge => "DK",
            NodeKind::Skill => "DS",
            NodeKind::Coding => "CS",
        }
    }
}

impl FromStr for NodeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        NodeKind::ALL.into_iter().find(|k| k.code() == s).ok_or_else(|| format!("unknown node kind {s:?}"))
    }
}

/// Node identity: kind plus normalized name. Displays as `KIND:key`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalKey {
    pub kind: NodeKind,
    pub key: String,
}

impl fmt::Display for CanonicalKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.code(), self.key)
    }
}

impl FromStr for CanonicalKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, key) = s.split_once(':').ok_or_else(|| format!("node id {s:?} lacks a kind prefix"))?;
        let kind: NodeKind = kind.parse()?;
        let canon = canonicalize(key, kind).map_err(|e| e.to_string())?;
        if canon.key != key {
            return Err(format!("node id {s:?} is not normalized"));
        }
        Ok(canon)
    }
}

impl Serialize for CanonicalKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CanonicalKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("name is empty after normalization")]
pub struct EmptyName;

/// Lowercases, trims and collapses internal whitespace. Usage strings are not
/// part of identity.
pub fn canonicalize(name: &str, kind: NodeKind) -> Result<CanonicalKey, EmptyName> {
    let key = name.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ");
    if key.is_empty() {
        return Err(EmptyName);
    }
    Ok(CanonicalKey { kind, key })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionPolicy {
    pub max_attempts: u32,
}

impl Default for ExtractionPolicy {
    fn default() -> Self {
        ExtractionPolicy { max_attempts: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkipReason {
    ParseFailure,
    BackendError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skip {
    pub doc_id: String,
    pub reason: SkipReason,
    pub attempts: u32,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtractionOutcome {
    Extracted { elements: ExtractedElements, attempts: u32 },
    Skipped(Skip),
}

/// Asks the backend for a structured reply, re-asking on parse failure up to
/// `policy.max_attempts` times. Backend errors (already retried by the
/// backend) skip the document immediately.
pub fn extract_elements(
    doc: &SeedDocument,
    backend: &dyn Backend,
    gen: &BackendConfig,
    policy: &ExtractionPolicy,
) -> ExtractionOutcome {
    let req = GenerationRequest::user(gen, render_extraction_prompt(doc));
    let max = policy.max_attempts.max(1);
    let mut last_failure = String::new();
    for attempt in 1..=max {
        let reply = match backend.complete(&req) {
            Ok(r) => r,
            Err(err) => return ExtractionOutcome::Skipped(backend_skip(doc, attempt, &err)),
        };
        match parse_extraction_output(&doc.id, &reply.text) {
            Ok(elements) => return ExtractionOutcome::Extracted { elements, attempts: attempt },
            Err(failure) => {
                log::debug!("{}: attempt {attempt} unparseable: {failure}", doc.id);
                last_failure = failure.to_string();
            }
        }
    }
    ExtractionOutcome::Skipped(Skip {
        doc_id: doc.id.clone(),
        reason: SkipReason::ParseFailure,
        attempts: max,
        detail: last_failure,
    })
}

fn backend_skip(doc: &SeedDocument, attempt: u32, err: &BackendError) -> Skip {
    Skip { doc_id: doc.id.clone(), reason: SkipReason::BackendError, attempts: attempt, detail: err.to_string() }
}

/// Extracts every document with bounded parallelism; output order follows input.
pub fn extract_all(
    docs: &[SeedDocument],
    backend: &dyn Backend,
    gen: &BackendConfig,
    policy: &ExtractionPolicy,
) -> (Vec<ExtractedElements>, Vec<Skip>) {
    let outcomes = bounded_map(docs, gen.parallelism, |_, doc| extract_elements(doc, backend, gen, policy));
    let mut extracted = Vec::new();
    let mut skips = Vec::new();
    for outcome in outcomes {
        match outcome {
            ExtractionOutcome::Extracted { elements, .. } => extracted.push(elements),
            ExtractionOutcome::Skipped(skip) => skips.push(skip),
        }
    }
    (extracted, skips)
}
