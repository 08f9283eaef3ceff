use std::collections::{HashMap, VecDeque};
use std::fs;
use std::path::Path;
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Backend, BackendConfig, BackendError, FinishReason, GenerationRequest, GenerationResult, TokenUsage};

const EXTRACTION_OPENING: &str = "You are a code-related text analysis expert";
const SELECTION_OPENING: &str = "three groups of feature descriptions";
const SYNTHESIS_OPENING: &str = "You are a problem designer";

/// What the mock does for prompts without a fixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MockFallback {
    /// Fail with [`BackendError::MissingFixture`].
    Error,
    /// Produce a deterministic reply shaped like the prompt expects.
    Synthetic,
}

/// Offline backend answering from a directory of `<prompt-hash>.txt` files.
pub struct MockBackend {
    fixtures: HashMap<String, String>,
    fallback: MockFallback,
}

impl MockBackend {
    pub fn new(fixtures: HashMap<String, String>, fallback: MockFallback) -> Self {
        MockBackend { fixtures, fallback }
    }

    pub fn from_dir(dir: &Path, fallback: MockFallback) -> Result<Self, BackendError> {
        let mut fixtures = HashMap::new();
        let entries = fs::read_dir(dir)
            .map_err(|e| BackendError::Config(format!("mock_dir {}: {e}", dir.display())))?;
        for entry in entries {
            let path = entry.map_err(|e| BackendError::Config(e.to_string()))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                continue;
            }
            let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else { continue };
            let body = fs::read_to_string(&path)
                .map_err(|e| BackendError::Config(format!("{}: {e}", path.display())))?;
            fixtures.insert(stem.to_ascii_lowercase(), body);
        }
        Ok(MockBackend { fixtures, fallback })
    }

    pub fn from_config(cfg: &BackendConfig) -> Result<Self, BackendError> {
        match &cfg.mock_dir {
            Some(dir) => Self::from_dir(dir, cfg.mock_fallback),
            None => Ok(Self::new(HashMap::new(), cfg.mock_fallback)),
        }
    }

    pub fn fixture_count(&self) -> usize {
        self.fixtures.len()
    }
}

fn word_count(s: &str) -> u64 {
    s.split_whitespace().count() as u64
}

fn finished(req: &GenerationRequest, text: String) -> GenerationResult {
    let prompt_tokens = word_count(&req.user_text) + req.system_text.as_deref().map(word_count).unwrap_or(0);
    GenerationResult {
        usage: TokenUsage { prompt_tokens, completion_tokens: word_count(&text) },
        finish_reason: if text.is_empty() { FinishReason::Error } else { FinishReason::Stop },
        text,
        attempts: 1,
    }
}

impl Backend for MockBackend {
    fn name(&self) -> &str {
        "mock"
    }

    fn complete(&self, req: &GenerationRequest) -> Result<GenerationResult, BackendError> {
        req.validate()?;
        let hash = req.prompt_hash();
        let text = match (self.fixtures.get(&hash), self.fallback) {
            (Some(text), _) => text.clone(),
            (None, MockFallback::Synthetic) => synthetic_reply(&req.user_text),
            (None, MockFallback::Error) => return Err(BackendError::MissingFixture(hash)),
        };
        Ok(finished(req, text))
    }
}

fn labels_for(seed: &[u8], salt: u8, count: usize) -> Vec<usize> {
    let mut key = [0u8; 32];
    key[..seed.len().min(31)].copy_from_slice(&seed[..seed.len().min(31)]);
    key[31] = salt;
    let mut rng = ChaCha8Rng::from_seed(key);
    let mut labels: Vec<usize> = (1..=10).collect();
    labels.shuffle(&mut rng);
    labels.truncate(count.min(10));
    labels
}

fn join_labels(labels: &[usize]) -> String {
    labels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(", ")
}

fn element_names<'a>(prompt: &'a str, header: &str) -> Vec<&'a str> {
    prompt
        .lines()
        .filter_map(|l| l.trim().strip_prefix(header))
        .map(|rest| rest.split(": ").next().unwrap_or(rest).trim())
        .filter(|n| !n.is_empty() && *n != "NA")
        .collect()
}

/// Deterministic stand-in reply, keyed off the prompt's opening text. The
/// digest of the prompt seeds every choice so replies are reproducible.
pub fn synthetic_reply(prompt: &str) -> String {
    let digest = crate::digest::sha256_hex(prompt.as_bytes());
    let tag = &digest[..8];
    if prompt.contains(EXTRACTION_OPENING) {
        return "NA".to_string();
    }
    if prompt.contains(SELECTION_OPENING) {
        let number = prompt
            .split("then select ")
            .nth(1)
            .and_then(|rest| rest.split_whitespace().next())
            .and_then(|n| n.parse::<usize>().ok())
            .unwrap_or(1);
        let bytes = hex::decode(&digest).unwrap_or_default();
        let knowledge = labels_for(&bytes, 0, number);
        let coding = labels_for(&bytes, 1, number);
        return format!(
            "Step-by-Step Thought Process\n\
             1. Pair the knowledge entries that share a workflow (mock {tag}).\n\
             2. Choose coding skills that support that workflow.\n\n\
             Selected Elements:\n\n\
             Domain Knowledge: {k}\nDomain Skill: {k}\nCoding Skill: {c}\n",
            k = join_labels(&knowledge),
            c = join_labels(&coding),
        );
    }
    if prompt.contains(SYNTHESIS_OPENING) {
        let knowledge = element_names(prompt, "Domain Knowledge: ");
        let coding = element_names(prompt, "Coding Skill: ");
        return format!(
            "Step-by-Step Thought Process:\n\
             1. Find a setting where {k} matter together.\n\
             2. Make the implementation depend on {c}.\n\n\
             Real World Coding Problem:\n\
             You are building a production service whose core task involves {k}. \
             Write a Python module that implements it end to end, relying on {c}. \
             The input is a CSV file with columns `id` (string), `value` (float) and `timestamp` (ISO-8601), \
             for example `a1,0.5,2024-01-01T00:00:00`. Print a summary report to stdout. [ref {tag}]\n",
            k = knowledge.join(", "),
            c = coding.join(", "),
        );
    }
    let first_line = prompt.lines().find(|l| !l.trim().is_empty()).unwrap_or("").trim();
    format!(
        "Solution outline for: {first_line}\n\n```python\n# reference solution {tag}\nimport csv\n\n\ndef main(path):\n    with open(path) as fh:\n        rows = list(csv.DictReader(fh))\n    print(len(rows))\n```\n"
    )
}

/// Replays a fixed sequence of replies regardless of the prompt, recording
/// every request it receives. Runs out with [`BackendError::MissingFixture`].
pub struct ScriptedBackend {
    script: Mutex<VecDeque<Result<String, BackendError>>>,
    seen: Mutex<Vec<GenerationRequest>>,
}

impl ScriptedBackend {
    pub fn new<I>(script: I) -> Self
    where
        I: IntoIterator<Item = Result<String, BackendError>>,
    {
        ScriptedBackend { script: Mutex::new(script.into_iter().collect()), seen: Mutex::new(Vec::new()) }
    }

    pub fn replies<I, S>(replies: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(replies.into_iter().map(|s| Ok(s.into())))
    }

    pub fn requests(&self) -> Vec<GenerationRequest> {
        self.seen.lock().expect("poisoned").clone()
    }
}

impl Backend for ScriptedBackend {
    fn name(&self) -> &str {
        "scripted"
    }

    fn complete(&self, req: &GenerationRequest) -> Result<GenerationResult, BackendError> {
        req.validate()?;
        self.seen.lock().expect("poisoned").push(req.clone());
        let next = self.script.lock().expect("poisoned").pop_front();
        match next {
            Some(Ok(text)) => Ok(finished(req, text)),
            Some(Err(e)) => Err(e),
            None => Err(BackendError::MissingFixture(req.prompt_hash())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::complete_batch;

    fn req(text: &str) -> GenerationRequest {
        GenerationRequest::user(&BackendConfig::default(), text)
    }

    #[test]
    fn fixtures_are_keyed_by_prompt_hash() {
        let dir = tempfile::tempdir().unwrap();
        let r = req("hello fixture");
        fs::write(dir.path().join(format!("{}.txt", r.prompt_hash())), "canned").unwrap();
        let mock = MockBackend::from_dir(dir.path(), MockFallback::Error).unwrap();
        assert_eq!(mock.complete(&r).unwrap().text, "canned");
        assert!(matches!(mock.complete(&req("other")), Err(BackendError::MissingFixture(_))));
    }

    #[test]
    fn system_text_changes_the_key() {
        let mut a = req("x");
        let h = a.prompt_hash();
        a.system_text = Some("sys".into());
        assert_ne!(a.prompt_hash(), h);
    }

    #[test]
    fn synthetic_replies_are_deterministic() {
        let mock = MockBackend::new(HashMap::new(), MockFallback::Synthetic);
        let a = mock.complete(&req("Write a haiku")).unwrap();
        let b = mock.complete(&req("Write a haiku")).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.finish_reason, FinishReason::Stop);
    }

    #[test]
    fn parallel_batch_matches_sequential() {
        let mock = MockBackend::new(HashMap::new(), MockFallback::Synthetic);
        let reqs: Vec<_> = (0..100).map(|i| req(&format!("prompt number {i}"))).collect();
        let seq = complete_batch(&mock, &reqs, 1).unwrap();
        let par = complete_batch(&mock, &reqs, 8).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn scripted_backend_replays_in_order() {
        let s = ScriptedBackend::replies(["one", "two"]);
        assert_eq!(s.complete(&req("a")).unwrap().text, "one");
        assert_eq!(s.complete(&req("b")).unwrap().text, "two");
        assert!(s.complete(&req("c")).is_err());
        assert_eq!(s.requests().len(), 3);
    }
}
