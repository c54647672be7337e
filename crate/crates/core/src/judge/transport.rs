use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

fn default_timeout_ms() -> u64 {
    60_000
}

fn default_pointer() -> String {
    "/choices/0/message/content".to_owned()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_retries: 2, backoff_ms: 500 }
    }
}

impl RetryPolicy {
    pub fn delay(&self, attempt: u32) -> Duration {
        Duration::from_millis(self.backoff_ms.saturating_mul(1u64 << attempt.min(16)))
    }
}

/// A chat-completion model the judge or generator talks to.
///
/// `request_template`, when set, is any JSON value whose string leaves
/// `"{{model}}"`, `"{{prompt}}"` and `"{{temperature}}"` are substituted; by
/// default an OpenAI-style `messages` body is sent. The reply text is read at
/// `response_pointer`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEndpoint {
    pub name: String,
    pub model: String,
    #[serde(default)]
    pub url: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default)]
    pub retry: RetryPolicy,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_template: Option<Value>,
    #[serde(default = "default_pointer")]
    pub response_pointer: String,
}

impl ModelEndpoint {
    pub fn new(name: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            model: model.into(),
            url: String::new(),
            api_key_env: None,
            timeout_ms: default_timeout_ms(),
            retry: RetryPolicy::default(),
            temperature: 0.0,
            request_template: None,
            response_pointer: default_pointer(),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    /// The parts of the endpoint that can change model output.
    pub(crate) fn semantic_key(&self) -> Value {
        serde_json::json!({
            "name": self.name,
            "model": self.model,
            "url": self.url,
            "temperature": self.temperature,
            "request_template": self.request_template,
        })
    }

    pub fn request_body(&self, prompt: &str) -> Value {
        match &self.request_template {
            Some(t) => substitute(t, &self.model, prompt, self.temperature),
            None => serde_json::json!({
                "model": self.model,
                "messages": [{"role": "user", "content": prompt}],
                "temperature": self.temperature,
            }),
        }
    }
}

fn substitute(v: &Value, model: &str, prompt: &str, temperature: f64) -> Value {
    match v {
        Value::String(s) => match s.as_str() {
            "{{model}}" => Value::String(model.to_owned()),
            "{{prompt}}" => Value::String(prompt.to_owned()),
            "{{temperature}}" => serde_json::json!(temperature),
            _ => v.clone(),
        },
        Value::Array(items) => Value::Array(items.iter().map(|x| substitute(x, model, prompt, temperature)).collect()),
        Value::Object(map) => {
            Value::Object(map.iter().map(|(k, x)| (k.clone(), substitute(x, model, prompt, temperature))).collect())
        }
        _ => v.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("request to {endpoint} failed: {message}")]
    Request { endpoint: String, message: String },
    #[error("unexpected response from {endpoint}: {message}")]
    Response { endpoint: String, message: String },
    #[error("missing credential: environment variable {0} is not set")]
    MissingCredential(String),
    #[error("{0}")]
    Other(String),
}

/// Sends one prompt to one model and returns the reply text.
pub trait ChatTransport: Send + Sync {
    fn complete(&self, endpoint: &ModelEndpoint, prompt: &str) -> Result<String, TransportError>;
}

/// Blocking HTTP transport for chat-completion style APIs.
#[derive(Debug, Default, Clone)]
pub struct HttpChatTransport;

impl ChatTransport for HttpChatTransport {
    fn complete(&self, endpoint: &ModelEndpoint, prompt: &str) -> Result<String, TransportError> {
        let request_err = |message: String| TransportError::Request { endpoint: endpoint.url.clone(), message };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(endpoint.timeout_ms)))
            .build()
            .into();
        let mut req = agent.post(&endpoint.url);
        if let Some(var) = &endpoint.api_key_env {
            let token = std::env::var(var).map_err(|_| TransportError::MissingCredential(var.clone()))?;
            req = req.header("Authorization", &format!("Bearer {token}"));
        }
        let mut resp = req.send_json(endpoint.request_body(prompt)).map_err(|e| request_err(e.to_string()))?;
        let body: Value = resp.body_mut().read_json().map_err(|e| request_err(e.to_string()))?;
        body.pointer(&endpoint.response_pointer)
            .and_then(Value::as_str)
            .map(str::to_owned)
            .ok_or_else(|| TransportError::Response {
                endpoint: endpoint.url.clone(),
                message: format!("no string at {}", endpoint.response_pointer),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_body_is_chat_messages() {
        let ep = ModelEndpoint::new("t", "m");
        let body = ep.request_body("hi");
        assert_eq!(body["model"], "m");
        assert_eq!(body["messages"][0]["content"], "hi");
        assert_eq!(body["temperature"], 0.0);
    }

    #[test]
    fn template_substitution() {
        let mut ep = ModelEndpoint::new("t", "m");
        ep.request_template = Some(serde_json::json!({"input": {"text": "{{prompt}}"}, "m": "{{model}}", "keep": 3}));
        let body = ep.request_body("hello");
        assert_eq!(body, serde_json::json!({"input": {"text": "hello"}, "m": "m", "keep": 3}));
    }

    #[test]
    fn backoff_doubles() {
        let p = RetryPolicy { max_retries: 2, backoff_ms: 100 };
        assert_eq!(p.delay(0), Duration::from_millis(100));
        assert_eq!(p.delay(2), Duration::from_millis(400));
    }
}
