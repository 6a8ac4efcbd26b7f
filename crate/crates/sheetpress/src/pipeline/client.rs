//! Model-client abstraction: a tiny trait, an HTTP implementation, and a
//! deterministic mock for tests and offline runs.

use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LlmError {
    /// Transient failure (network, 429, 5xx) — worth retrying.
    #[error("transport: {0}")]
    Transport(String),
    /// Permanent failure — retrying cannot help.
    #[error("{0}")]
    Fatal(String),
}

/// One completion request. Sampling defaults are pinned for reproducibility:
/// temperature 0, 300 max tokens, top-p 0.95.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LlmRequest {
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub top_p: f64,
}

impl LlmRequest {
    pub fn new(prompt: String) -> Self {
        LlmRequest { prompt, ..LlmRequest::default() }
    }
}

impl Default for LlmRequest {
    fn default() -> Self {
        LlmRequest { prompt: String::new(), temperature: 0.0, max_tokens: 300, top_p: 0.95 }
    }
}

/// A completion backend. Implementations must be shareable across the
/// worker threads that answer region chunks in parallel.
pub trait LlmClient: Send + Sync {
    fn complete(&self, request: &LlmRequest) -> Result<String, LlmError>;
}

/// Calls `complete`, retrying transport errors with exponential backoff.
pub fn complete_with_retry(
    client: &dyn LlmClient,
    request: &LlmRequest,
    max_attempts: usize,
    base_backoff: Duration,
) -> Result<String, LlmError> {
    let mut last = None;
    for attempt in 0..max_attempts.max(1) {
        match client.complete(request) {
            Ok(text) => return Ok(text),
            Err(LlmError::Transport(msg)) => {
                log::warn!("completion attempt {} failed: {msg}", attempt + 1);
                last = Some(LlmError::Transport(msg));
                if attempt + 1 < max_attempts {
                    std::thread::sleep(base_backoff * 2u32.pow(attempt as u32));
                }
            }
            Err(fatal) => return Err(fatal),
        }
    }
    Err(last.unwrap_or_else(|| LlmError::Fatal("no completion attempts were made".into())))
}

/// JSON-over-HTTP client: POSTs the request body and reads a plain-text or
/// `{"text": ...}` response. Bearer auth token comes from the environment
/// variable named in the configuration, never from the config file itself.
pub struct HttpLlmClient {
    endpoint: String,
    model: Option<String>,
    token: Option<String>,
    agent: reqwest::blocking::Client,
}

impl HttpLlmClient {
    pub fn new(
        endpoint: &str,
        model: &str,
        auth_env: &str,
        timeout: Duration,
    ) -> Result<Self, LlmError> {
        let agent = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| LlmError::Fatal(format!("building HTTP client: {e}")))?;
        Ok(HttpLlmClient {
            endpoint: endpoint.to_string(),
            model: (!model.is_empty()).then(|| model.to_string()),
            token: std::env::var(auth_env).ok(),
            agent,
        })
    }
}

impl LlmClient for HttpLlmClient {
    fn complete(&self, request: &LlmRequest) -> Result<String, LlmError> {
        let mut body = serde_json::to_value(request)
            .map_err(|e| LlmError::Fatal(format!("encoding request: {e}")))?;
        if let Some(model) = &self.model {
            body["model"] = serde_json::Value::String(model.clone());
        }
        let mut call = self.agent.post(&self.endpoint).json(&body);
        if let Some(token) = &self.token {
            call = call.bearer_auth(token);
        }
        let response = call.send().map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = response.status();
        let body = response.text().map_err(|e| LlmError::Transport(e.to_string()))?;
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(LlmError::Transport(format!("status {status}: {body}")));
        }
        if !status.is_success() {
            return Err(LlmError::Fatal(format!("status {status}: {body}")));
        }
        // Accept either a raw-text body or a JSON object with a "text" field.
        if let Ok(value) = serde_json::from_str::<serde_json::Value>(&body) {
            if let Some(text) = value.get("text").and_then(|t| t.as_str()) {
                return Ok(text.to_string());
            }
        }
        Ok(body)
    }
}

/// Replays a scripted list of responses in order and records every request.
/// Running past the script is a fatal error, so tests notice extra calls.
pub struct MockLlmClient {
    responses: Mutex<VecDeque<String>>,
    calls: Mutex<Vec<LlmRequest>>,
}

impl MockLlmClient {
    pub fn new(responses: Vec<String>) -> Self {
        MockLlmClient {
            responses: Mutex::new(responses.into()),
            calls: Mutex::new(Vec::new()),
        }
    }

    /// Loads a JSON array of response strings.
    pub fn from_json(bytes: &[u8]) -> Result<Self, LlmError> {
        let responses: Vec<String> = serde_json::from_slice(bytes)
            .map_err(|e| LlmError::Fatal(format!("mock responses: {e}")))?;
        Ok(MockLlmClient::new(responses))
    }

    /// Every request seen so far, in call order.
    pub fn calls(&self) -> Vec<LlmRequest> {
        self.calls.lock().expect("mock call ledger poisoned").clone()
    }

    pub fn remaining(&self) -> usize {
        self.responses.lock().expect("mock script poisoned").len()
    }
}

impl LlmClient for MockLlmClient {
    fn complete(&self, request: &LlmRequest) -> Result<String, LlmError> {
        self.calls.lock().expect("mock call ledger poisoned").push(request.clone());
        self.responses
            .lock()
            .expect("mock script poisoned")
            .pop_front()
            .ok_or_else(|| LlmError::Fatal("mock response script exhausted".into()))
    }
}
