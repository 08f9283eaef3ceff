//! Text-generation backends behind a common trait.
//!
//! Backends are constructed by name through [`BackendRegistry`]; the built-in
//! names are `mock` (prompt-hash fixtures, fully offline) and
//! `chat-completions` (any server speaking the chat-completions JSON protocol).

mod http;
mod mock;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::digest::sha256_hex;

pub use http::{ChatCompletionBackend, RetryPolicy};
pub use mock::{synthetic_reply, MockBackend, MockFallback, ScriptedBackend};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub system_text: Option<String>,
    pub user_text: String,
    pub max_output_tokens: u32,
    pub temperature: f64,
    pub model_id: String,
    pub thinking_mode: bool,
}

impl GenerationRequest {
    /// A user-only request with generation settings taken from `cfg`.
    pub fn user(cfg: &BackendConfig, user_text: impl Into<String>) -> Self {
        GenerationRequest {
            system_text: None,
            user_text: user_text.into(),
            max_output_tokens: cfg.max_output_tokens,
            temperature: cfg.temperature,
            model_id: cfg.model_id.clone(),
            thinking_mode: cfg.thinking_mode,
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.user_text.is_empty() {
            return Err(BackendError::Precondition("user_text is empty".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(BackendError::Precondition(format!("temperature {} outside [0, 2]", self.temperature)));
        }
        Ok(())
    }

    /// Stable key used by the mock backend: SHA-256 of the user text, or of
    /// `system + "\n\n" + user` when a system text is present.
    pub fn prompt_hash(&self) -> String {
        match &self.system_text {
            None => sha256_hex(self.user_text.as_bytes()),
            Some(system) => sha256_hex(format!("{system}\n\n{}", self.user_text).as_bytes()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinishReason {
    Stop,
    Length,
    Error,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationResult {
    pub text: String,
    pub finish_reason: FinishReason,
    pub usage: TokenUsage,
    /// Number of attempts it took, including the successful one.
    pub attempts: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("invalid request: {0}")]
    Precondition(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("authentication failed: {0}")]
    Authentication(String),
    #[error("rate limited: {0}")]
    RateLimited(String),
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("no mock fixture for prompt {0}")]
    MissingFixture(String),
    #[error("backend configuration: {0}")]
    Config(String),
}

impl BackendError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, BackendError::Transport(_) | BackendError::RateLimited(_))
    }
}

pub trait Backend: Send + Sync {
    fn name(&self) -> &str;
    fn complete(&self, req: &GenerationRequest) -> Result<GenerationResult, BackendError>;
}

/// Runs `f` over `items` with at most `parallelism` calls in flight, returning
/// results in input order.
pub fn bounded_map<T, R, F>(items: &[T], parallelism: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync,
{
    let workers = parallelism.max(1).min(items.len());
    if workers <= 1 {
        return items.iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::Relaxed);
                if idx >= items.len() {
                    break;
                }
                let out = f(idx, &items[idx]);
                slots.lock().expect("result slots poisoned")[idx] = Some(out);
            });
        }
    });
    slots
        .into_inner()
        .expect("result slots poisoned")
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect()
}

/// Completes every request; per-item failures are reported positionally.
pub fn complete_batch(
    backend: &dyn Backend,
    reqs: &[GenerationRequest],
    parallelism: usize,
) -> Result<Vec<Result<GenerationResult, BackendError>>, BackendError> {
    if parallelism == 0 {
        return Err(BackendError::Precondition("parallelism must be at least 1".into()));
    }
    Ok(bounded_map(reqs, parallelism, |_, req| backend.complete(req)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    /// Registry name of the backend implementation.
    pub kind: String,
    pub endpoint: Option<String>,
    pub model_id: String,
    /// Environment variable holding the bearer credential.
    pub api_key_env: String,
    pub timeout_secs: u64,
    /// Total attempts per request, including the first.
    pub max_retries: u32,
    pub initial_backoff_ms: u64,
    pub parallelism: usize,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub thinking_mode: bool,
    pub mock_dir: Option<PathBuf>,
    pub mock_fallback: MockFallback,
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig {
            kind: "mock".into(),
            endpoint: None,
            model_id: "qwen3-32b".into(),
            api_key_env: "SCOGEN_API_KEY".into(),
            timeout_secs: 120,
            max_retries: 5,
            initial_backoff_ms: 1000,
            parallelism: 8,
            temperature: 0.7,
            max_output_tokens: 4096,
            thinking_mode: false,
            mock_dir: None,
            mock_fallback: MockFallback::Synthetic,
        }
    }
}

impl BackendConfig {
    /// Resolves relative paths against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        if let Some(dir) = &self.mock_dir {
            if dir.is_relative() {
                self.mock_dir = Some(base.join(dir));
            }
        }
    }

    pub fn validate(&self, registry: &BackendRegistry) -> Vec<String> {
        let mut errors = Vec::new();
        if !registry.contains(&self.kind) {
            errors.push(format!("backend.kind {:?} is not registered (known: {})", self.kind, registry.names().join(", ")));
        }
        if self.parallelism == 0 {
            errors.push("backend.parallelism must be at least 1".into());
        }
        if self.max_retries == 0 {
            errors.push("backend.max_retries must be at least 1".into());
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            errors.push(format!("backend.temperature {} outside [0, 2]", self.temperature));
        }
        if self.kind == "chat-completions" {
            if self.endpoint.as_deref().unwrap_or("").is_empty() {
                errors.push("backend.endpoint is required for chat-completions".into());
            }
            if std::env::var(&self.api_key_env).map(|v| v.is_empty()).unwrap_or(true) {
                errors.push(format!("backend credential missing: environment variable {} is not set", self.api_key_env));
            }
        }
        errors
    }
}

pub type BackendFactory = fn(&BackendConfig) -> Result<Arc<dyn Backend>, BackendError>;

/// Name → constructor table for backends.
pub struct BackendRegistry {
    factories: BTreeMap<&'static str, BackendFactory>,
}

impl BackendRegistry {
    pub fn empty() -> Self {
        BackendRegistry { factories: BTreeMap::new() }
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::empty();
        reg.register("mock", |cfg| Ok(Arc::new(MockBackend::from_config(cfg)?)));
        reg.register("chat-completions", |cfg| Ok(Arc::new(ChatCompletionBackend::from_config(cfg)?)));
        reg
    }

    pub fn register(&mut self, name: &'static str, factory: BackendFactory) {
        self.factories.insert(name, factory);
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.factories.keys().copied().collect()
    }

    pub fn build(&self, cfg: &BackendConfig) -> Result<Arc<dyn Backend>, BackendError> {
        let factory = self
            .factories
            .get(cfg.kind.as_str())
            .ok_or_else(|| BackendError::Config(format!("unknown backend kind {:?}", cfg.kind)))?;
        factory(cfg)
    }
}
