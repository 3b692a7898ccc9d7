//! HTTP chat-completions provider.
//!
//! Speaks the common `POST /v1/chat/completions` shape: bearer-token auth,
//! a `messages` array with one user turn, and a `choices[0].message.content`
//! reply. Endpoint and key come from the environment so no credentials
//! live in configs.

use std::time::Duration;

use serde_json::{json, Value};

use super::{CompletionRequest, GatewayError, Provider};

/// Environment variable naming the completions endpoint URL.
pub const ENDPOINT_ENV: &str = "COLLOQUY_LLM_ENDPOINT";
/// Environment variable holding the bearer token (optional for local
/// endpoints that skip auth).
pub const API_KEY_ENV: &str = "COLLOQUY_LLM_API_KEY";

pub struct HttpProvider {
    endpoint: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpProvider {
    pub fn new(endpoint: &str, api_key: Option<&str>) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| GatewayError::Provider(format!("cannot build HTTP client: {e}")))?;
        Ok(HttpProvider {
            endpoint: endpoint.to_owned(),
            api_key: api_key.map(str::to_owned),
            client,
        })
    }

    /// Configure from `COLLOQUY_LLM_ENDPOINT` / `COLLOQUY_LLM_API_KEY`.
    pub fn from_env() -> Result<Self, GatewayError> {
        let endpoint = std::env::var(ENDPOINT_ENV)
            .map_err(|_| GatewayError::Auth(format!("{ENDPOINT_ENV} is not set")))?;
        let api_key = std::env::var(API_KEY_ENV).ok();
        HttpProvider::new(&endpoint, api_key.as_deref())
    }
}

impl Provider for HttpProvider {
    fn complete(&self, req: &CompletionRequest) -> Result<String, GatewayError> {
        let mut body = json!({
            "model": req.model_id,
            "temperature": req.temperature,
            "messages": [{"role": "user", "content": req.prompt}],
        });
        if let Some(max) = req.max_output {
            body["max_tokens"] = json!(max);
        }

        let mut call = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            call = call.bearer_auth(key);
        }

        let resp = call.send().map_err(|e| {
            if e.is_timeout() {
                GatewayError::Timeout(e.to_string())
            } else {
                GatewayError::Provider(e.to_string())
            }
        })?;

        let status = resp.status();
        let text = resp
            .text()
            .map_err(|e| GatewayError::Provider(format!("unreadable response body: {e}")))?;
        match status.as_u16() {
            200..=299 => {}
            401 | 403 => return Err(GatewayError::Auth(trim_body(&text))),
            429 => return Err(GatewayError::RateLimited(trim_body(&text))),
            408 | 504 => return Err(GatewayError::Timeout(trim_body(&text))),
            code => {
                return Err(GatewayError::Provider(format!("HTTP {code}: {}", trim_body(&text))))
            }
        }

        let parsed: Value = serde_json::from_str(&text)
            .map_err(|e| GatewayError::Provider(format!("non-JSON completion body: {e}")))?;
        parsed["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| {
                GatewayError::Provider("completion body lacks choices[0].message.content".into())
            })
    }

    fn name(&self) -> &str {
        "http"
    }
}

fn trim_body(body: &str) -> String {
    let t = body.trim();
    if t.len() > 200 {
        format!("{}…", &t[..t.char_indices().take(200).last().map_or(0, |(i, c)| i + c.len_utf8())])
    } else {
        t.to_owned()
    }
}
