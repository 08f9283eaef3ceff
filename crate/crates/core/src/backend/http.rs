use std::time::Duration;

use rand::Rng;
use serde_json::{json, Value};

use super::{Backend, BackendConfig, BackendError, FinishReason, GenerationRequest, GenerationResult, TokenUsage};

#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    /// Total attempts, including the first.
    pub max_attempts: u32,
    pub initial_backoff: Duration,
}

impl RetryPolicy {
    /// Exponential backoff, doubled per retry and jittered by ±50%.
    pub fn backoff(&self, retry: u32) -> Duration {
        let base = self.initial_backoff.as_secs_f64() * 2f64.powi(retry.saturating_sub(1) as i32);
        let jitter: f64 = rand::thread_rng().gen_range(0.5..1.5);
        Duration::from_secs_f64(base * jitter)
    }
}

/// Client for servers that speak the chat-completions JSON protocol.
pub struct ChatCompletionBackend {
    agent: ureq::Agent,
    url: String,
    api_key: Option<String>,
    retry: RetryPolicy,
}

impl ChatCompletionBackend {
    pub fn new(endpoint: &str, api_key: Option<String>, timeout: Duration, retry: RetryPolicy) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let trimmed = endpoint.trim_end_matches('/');
        let url = if trimmed.ends_with("/chat/completions") {
            trimmed.to_string()
        } else {
            format!("{trimmed}/chat/completions")
        };
        ChatCompletionBackend { agent, url, api_key, retry }
    }

    pub fn from_config(cfg: &BackendConfig) -> Result<Self, BackendError> {
        let endpoint = cfg
            .endpoint
            .as_deref()
            .filter(|e| !e.is_empty())
            .ok_or_else(|| BackendError::Config("endpoint is required".into()))?;
        let api_key = std::env::var(&cfg.api_key_env).ok().filter(|k| !k.is_empty());
        if api_key.is_none() {
            return Err(BackendError::Authentication(format!(
                "environment variable {} is not set",
                cfg.api_key_env
            )));
        }
        Ok(Self::new(
            endpoint,
            api_key,
            Duration::from_secs(cfg.timeout_secs),
            RetryPolicy {
                max_attempts: cfg.max_retries.max(1),
                initial_backoff: Duration::from_millis(cfg.initial_backoff_ms),
            },
        ))
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn body(req: &GenerationRequest) -> Value {
        let mut messages = Vec::new();
        if let Some(system) = &req.system_text {
            messages.push(json!({"role": "system", "content": system}));
        }
        messages.push(json!({"role": "user", "content": req.user_text}));
        json!({
            "model": req.model_id,
            "messages": messages,
            "temperature": req.temperature,
            "max_tokens": req.max_output_tokens,
            "chat_template_kwargs": {"enable_thinking": req.thinking_mode},
        })
    }

    fn attempt(&self, body: &str) -> Result<(String, FinishReason, TokenUsage), BackendError> {
        let mut call = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = call.send(body).map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| BackendError::Transport(e.to_string()))?;
        match status {
            200..=299 => parse_response(&text),
            401 | 403 => Err(BackendError::Authentication(format!("HTTP {status}"))),
            429 => Err(BackendError::RateLimited(format!("HTTP {status}"))),
            500..=599 | 408 => Err(BackendError::Transport(format!("HTTP {status}"))),
            _ => Err(BackendError::Malformed(format!("HTTP {status}: {}", truncate(&text, 200)))),
        }
    }
}

fn truncate(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((idx, _)) => &s[..idx],
        None => s,
    }
}

fn parse_response(text: &str) -> Result<(String, FinishReason, TokenUsage), BackendError> {
    let value: Value = serde_json::from_str(text).map_err(|e| BackendError::Malformed(e.to_string()))?;
    let choice = value
        .get("choices")
        .and_then(|c| c.get(0))
        .ok_or_else(|| BackendError::Malformed("response has no choices".into()))?;
    let content = choice
        .pointer("/message/content")
        .and_then(Value::as_str)
        .ok_or_else(|| BackendError::Malformed("first choice has no message content".into()))?;
    let finish = match choice.get("finish_reason").and_then(Value::as_str) {
        Some("length") => FinishReason::Length,
        Some("stop") | None => FinishReason::Stop,
        Some(_) => FinishReason::Error,
    };
    if finish == FinishReason::Stop && content.is_empty() {
        return Err(BackendError::Malformed("empty completion".into()));
    }
    let usage = TokenUsage {
        prompt_tokens: value.pointer("/usage/prompt_tokens").and_then(Value::as_u64).unwrap_or(0),
        completion_tokens: value.pointer("/usage/completion_tokens").and_then(Value::as_u64).unwrap_or(0),
    };
    Ok((content.to_string(), finish, usage))
}

impl Backend for ChatCompletionBackend {
    fn name(&self) -> &str {
        "chat-completions"
    }

    fn complete(&self, req: &GenerationRequest) -> Result<GenerationResult, BackendError> {
        req.validate()?;
        let body = Self::body(req).to_string();
        let mut attempt = 1;
        loop {
            match self.attempt(&body) {
                Ok((text, finish_reason, usage)) => {
                    return Ok(GenerationResult { text, finish_reason, usage, attempts: attempt });
                }
                Err(err) if err.is_retryable() && attempt < self.retry.max_attempts => {
                    let wait = self.retry.backoff(attempt);
                    log::warn!("attempt {attempt}/{} failed ({err}); retrying in {wait:?}", self.retry.max_attempts);
                    std::thread::sleep(wait);
                    attempt += 1;
                }
                Err(err) => {
                    log::warn!("request failed after {attempt} attempt(s): {err}");
                    return Err(err);
                }
            }
        }
    }
}
