use std::time::Instant;

use super::{wire, ChatRequest, ChatResponse, GatewayError, ModelEndpoint, Transport};

/// Live chat-completions transport over HTTP(S).
#[derive(Debug, Clone)]
pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new() -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .build()
            .map_err(|e| GatewayError::Config(format!("http client: {e}")))?;
        Ok(Self { client })
    }

    fn url(endpoint: &ModelEndpoint) -> String {
        format!("{}/chat/completions", endpoint.base_url.trim_end_matches('/'))
    }
}

impl Transport for HttpTransport {
    fn send(&self, endpoint: &ModelEndpoint, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let name = || endpoint.name.clone();
        let mut builder = self
            .client
            .post(Self::url(endpoint))
            .timeout(endpoint.timeout())
            .json(&wire::request_body(&endpoint.model, request));
        if let Some(var) = &endpoint.api_key_env {
            let key = std::env::var(var).map_err(|_| GatewayError::Auth {
                endpoint: name(),
                message: format!("environment variable {var} is not set"),
            })?;
            builder = builder.bearer_auth(key);
        }

        let started = Instant::now();
        let resp = builder.send().map_err(|e| {
            if e.is_timeout() {
                GatewayError::Timeout {
                    endpoint: name(),
                    timeout_s: endpoint.timeout_s,
                }
            } else {
                GatewayError::Transport {
                    endpoint: name(),
                    message: e.to_string(),
                }
            }
        })?;
        let status = resp.status().as_u16();
        let body = resp.bytes().map_err(|e| {
            if e.is_timeout() {
                GatewayError::Timeout {
                    endpoint: name(),
                    timeout_s: endpoint.timeout_s,
                }
            } else {
                GatewayError::Transport {
                    endpoint: name(),
                    message: e.to_string(),
                }
            }
        })?;
        let latency_s = started.elapsed().as_secs_f64();

        if status == 401 || status == 403 {
            return Err(GatewayError::Auth {
                endpoint: name(),
                message: format!("HTTP {status}: {}", String::from_utf8_lossy(&body)),
            });
        }
        if !(200..300).contains(&status) {
            return Err(GatewayError::Status {
                endpoint: name(),
                status,
                body: String::from_utf8_lossy(&body).chars().take(500).collect(),
            });
        }
        let (reply, usage) = wire::parse_response_body(&body).map_err(|message| GatewayError::MalformedBody {
            endpoint: name(),
            message,
        })?;
        Ok(ChatResponse {
            reply,
            latency_s,
            usage,
        })
    }
}
