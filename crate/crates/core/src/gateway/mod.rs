//! Transport layer for model calls: chat-completion requests with tool calling,
//! retrying client, concurrent fan-out, and record/replay cassettes.

mod cassette;
mod http;
pub mod wire;

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

pub use cassette::{request_digest, Cassette, CassetteEntry, CassetteMode};
pub use http::HttpTransport;

/// One model endpoint. Credentials are referenced by environment variable name only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEndpoint {
    /// Stable identifier used in ballots and telemetry.
    pub name: String,
    pub base_url: String,
    pub model: String,
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
}

fn default_timeout() -> f64 {
    60.0
}

fn default_retries() -> u32 {
    2
}

impl ModelEndpoint {
    pub fn new(name: impl Into<String>, base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            base_url: base_url.into(),
            model: model.into(),
            api_key_env: None,
            timeout_s: default_timeout(),
            max_retries: default_retries(),
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if !(self.timeout_s > 0.0 && self.timeout_s.is_finite()) {
            return Err(GatewayError::Config(format!(
                "endpoint {}: timeout must be positive",
                self.name
            )));
        }
        if self.model.trim().is_empty() {
            return Err(GatewayError::Config(format!("endpoint {}: model is empty", self.name)));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub text: String,
    /// PNG bytes, base64-encoded when serialized.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_base64")]
    pub image_png: Option<Vec<u8>>,
}

impl ChatMessage {
    pub fn system(text: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            text: text.into(),
            image_png: None,
        }
    }

    pub fn user(text: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            text: text.into(),
            image_png: None,
        }
    }

    pub fn with_image(mut self, png: Vec<u8>) -> Self {
        self.image_png = Some(png);
        self
    }
}

mod opt_base64 {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<u8>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(bytes) => s.serialize_str(&STANDARD.encode(bytes)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<u8>>, D::Error> {
        let s: Option<String> = Option::deserialize(d)?;
        s.map(|s| STANDARD.decode(s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

/// A callable function exposed to the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolDefinition {
    pub name: String,
    pub description: String,
    /// JSON Schema of the argument object.
    pub parameters: Value,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ChatRequest {
    pub messages: Vec<ChatMessage>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tools: Vec<ToolDefinition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
}

impl ChatRequest {
    pub fn new(messages: Vec<ChatMessage>) -> Self {
        Self {
            messages,
            ..Self::default()
        }
    }

    pub fn with_tools(mut self, tools: Vec<ToolDefinition>) -> Self {
        self.tools = tools;
        self
    }

    pub fn with_temperature(mut self, t: f64) -> Self {
        self.temperature = Some(t);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Reply {
    Text {
        text: String,
    },
    ToolCall {
        name: String,
        arguments: Map<String, Value>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub reply: Reply,
    pub latency_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<TokenUsage>,
}

impl ChatResponse {
    pub fn text(text: impl Into<String>) -> Self {
        Self {
            reply: Reply::Text { text: text.into() },
            latency_s: 0.0,
            usage: None,
        }
    }

    pub fn tool_call(name: impl Into<String>, arguments: Map<String, Value>) -> Self {
        Self {
            reply: Reply::ToolCall {
                name: name.into(),
                arguments,
            },
            latency_s: 0.0,
            usage: None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match &self.reply {
            Reply::Text { text } => Some(text),
            Reply::ToolCall { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GatewayError {
    #[error("request to {endpoint} timed out after {timeout_s}s")]
    Timeout { endpoint: String, timeout_s: f64 },
    #[error("authentication failed for {endpoint}: {message}")]
    Auth { endpoint: String, message: String },
    #[error("malformed response body from {endpoint}: {message}")]
    MalformedBody { endpoint: String, message: String },
    #[error("{endpoint} returned HTTP {status}: {body}")]
    Status {
        endpoint: String,
        status: u16,
        body: String,
    },
    #[error("transport failure talking to {endpoint}: {message}")]
    Transport { endpoint: String, message: String },
    #[error("no recorded response for request digest {digest} (model {model})")]
    ReplayMiss { digest: String, model: String },
    #[error("cassette: {0}")]
    Cassette(String),
    #[error("configuration: {0}")]
    Config(String),
}

impl GatewayError {
    /// Whether a retry could plausibly succeed.
    pub fn is_transient(&self) -> bool {
        match self {
            GatewayError::Timeout { .. } | GatewayError::Transport { .. } => true,
            GatewayError::Status { status, .. } => *status == 408 || *status == 429 || *status >= 500,
            _ => false,
        }
    }

    /// Short machine-readable label carried into telemetry.
    pub fn kind(&self) -> &'static str {
        match self {
            GatewayError::Timeout { .. } => "timeout",
            GatewayError::Auth { .. } => "auth",
            GatewayError::MalformedBody { .. } => "malformed_body",
            GatewayError::Status { .. } => "http_status",
            GatewayError::Transport { .. } => "transport",
            GatewayError::ReplayMiss { .. } => "replay_miss",
            GatewayError::Cassette(_) => "cassette",
            GatewayError::Config(_) => "config",
        }
    }
}

/// Anything that can answer a chat request for an endpoint.
pub trait Transport: Send + Sync {
    fn send(&self, endpoint: &ModelEndpoint, request: &ChatRequest) -> Result<ChatResponse, GatewayError>;
}

/// Exponential backoff with multiplicative jitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Backoff {
    pub base_s: f64,
    pub factor: f64,
    /// Each delay is scaled by a uniform factor in `[1 - jitter, 1 + jitter]`.
    pub jitter: f64,
}

impl Default for Backoff {
    fn default() -> Self {
        Self {
            base_s: 1.0,
            factor: 2.0,
            jitter: 0.2,
        }
    }
}

impl Backoff {
    /// Delay before retry number `retry` (1-based).
    pub fn delay(&self, retry: u32) -> Duration {
        let nominal = self.base_s * self.factor.powi(retry.saturating_sub(1) as i32);
        let scale = if self.jitter > 0.0 {
            rand::rng().random_range(1.0 - self.jitter..=1.0 + self.jitter)
        } else {
            1.0
        };
        Duration::from_secs_f64((nominal * scale).max(0.0))
    }
}

/// Retrying client over a transport. Cheap to clone and shareable across threads.
#[derive(Clone)]
pub struct Gateway {
    transport: Arc<dyn Transport>,
    backoff: Backoff,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway").field("backoff", &self.backoff).finish()
    }
}

impl Gateway {
    pub fn new(transport: Arc<dyn Transport>) -> Self {
        Self {
            transport,
            backoff: Backoff::default(),
        }
    }

    pub fn with_backoff(mut self, backoff: Backoff) -> Self {
        self.backoff = backoff;
        self
    }

    /// Sends one request, retrying transient failures up to the endpoint's retry budget.
    pub fn complete(&self, endpoint: &ModelEndpoint, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        endpoint.validate()?;
        let mut retry = 0;
        loop {
            let started = Instant::now();
            match self.transport.send(endpoint, request) {
                Ok(resp) => {
                    tracing::debug!(
                        endpoint = %endpoint.name,
                        latency_s = resp.latency_s,
                        wall_s = started.elapsed().as_secs_f64(),
                        "model call complete"
                    );
                    return Ok(resp);
                }
                Err(e) if e.is_transient() && retry < endpoint.max_retries => {
                    retry += 1;
                    let delay = self.backoff.delay(retry);
                    tracing::warn!(endpoint = %endpoint.name, error = %e, retry, ?delay, "retrying model call");
                    std::thread::sleep(delay);
                }
                Err(e) => {
                    tracing::warn!(endpoint = %endpoint.name, kind = e.kind(), error = %e, "model call failed");
                    return Err(e);
                }
            }
        }
    }

    /// Issues one request per endpoint concurrently. Results come back in input order;
    /// a failing endpoint never disturbs its siblings.
    pub fn fan_out<F>(
        &self,
        endpoints: &[ModelEndpoint],
        build: F,
    ) -> Vec<(ModelEndpoint, Result<ChatResponse, GatewayError>)>
    where
        F: Fn(&ModelEndpoint) -> ChatRequest + Sync,
    {
        std::thread::scope(|scope| {
            let handles: Vec<_> = endpoints
                .iter()
                .map(|ep| {
                    let build = &build;
                    scope.spawn(move || self.complete(ep, &build(ep)))
                })
                .collect();
            endpoints
                .iter()
                .cloned()
                .zip(handles)
                .map(|(ep, h)| {
                    let result = h.join().unwrap_or_else(|_| {
                        Err(GatewayError::Transport {
                            endpoint: ep.name.clone(),
                            message: "request thread panicked".into(),
                        })
                    });
                    (ep, result)
                })
                .collect()
        })
    }
}
