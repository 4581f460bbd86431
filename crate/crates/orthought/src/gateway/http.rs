//! OpenAI-compatible chat-completion transport.

use std::time::Duration;

use orthought_core::{Completion, CompletionRequest, TokenUsage};
use serde::Deserialize;
use serde_json::json;

use super::{Transport, TransportError};

pub const ENV_BASE_URL: &str = "ORTHOUGHT_API_BASE";
pub const ENV_API_KEY: &str = "ORTHOUGHT_API_KEY";
pub const ENV_MODEL: &str = "ORTHOUGHT_MODEL";
pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";
pub const DEFAULT_MODEL: &str = "gpt-4.1-nano";

#[derive(Debug, Clone)]
pub struct ProviderConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    pub default_model: String,
    pub timeout: Duration,
}

impl ProviderConfig {
    /// Reads `ORTHOUGHT_API_BASE`, `ORTHOUGHT_API_KEY` (falling back to
    /// `OPENAI_API_KEY`) and `ORTHOUGHT_MODEL`.
    pub fn from_env() -> Self {
        let var = |k: &str| std::env::var(k).ok().filter(|v| !v.is_empty());
        Self {
            base_url: var(ENV_BASE_URL).unwrap_or_else(|| DEFAULT_BASE_URL.into()),
            api_key: var(ENV_API_KEY).or_else(|| var("OPENAI_API_KEY")),
            default_model: var(ENV_MODEL).unwrap_or_else(|| DEFAULT_MODEL.into()),
            timeout: Duration::from_secs(300),
        }
    }
}

pub struct HttpTransport {
    agent: ureq::Agent,
    endpoint: String,
    api_key: Option<String>,
}

impl HttpTransport {
    pub fn new(config: &ProviderConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .new_agent();
        Self {
            agent,
            endpoint: format!("{}/chat/completions", config.base_url.trim_end_matches('/')),
            api_key: config.api_key.clone(),
        }
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    #[serde(default)]
    id: Option<String>,
    #[serde(default)]
    model: Option<String>,
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct Usage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

/// Decodes a chat-completion response body.
pub fn parse_chat_response(body: &str) -> Result<Completion, TransportError> {
    let resp: ChatResponse =
        serde_json::from_str(body).map_err(|e| TransportError::Fatal(format!("malformed provider response: {e}")))?;
    let choice = resp
        .choices
        .into_iter()
        .next()
        .ok_or_else(|| TransportError::Fatal("provider response has no choices".into()))?;
    let usage = resp.usage.map_or_else(TokenUsage::default, |u| {
        TokenUsage::new(u.prompt_tokens, u.completion_tokens)
    });
    let mut completion = Completion::new(choice.message.content.unwrap_or_default(), usage);
    let meta = &mut completion.provider_meta;
    if let Some(id) = resp.id {
        meta.insert("id".into(), id);
    }
    if let Some(model) = resp.model {
        meta.insert("model".into(), model);
    }
    if let Some(reason) = choice.finish_reason {
        meta.insert("finish_reason".into(), reason);
    }
    Ok(completion)
}

impl Transport for HttpTransport {
    fn send(&self, request: &CompletionRequest) -> Result<Completion, TransportError> {
        let mut body = json!({
            "model": request.model,
            "temperature": request.temperature,
            "messages": request.messages,
        });
        if let Some(max) = request.max_tokens {
            body["max_tokens"] = json!(max);
        }
        let mut call = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = match call.send_json(&body) {
            Ok(r) => r,
            Err(ureq::Error::Timeout(t)) => return Err(TransportError::Transient(format!("timeout: {t}"))),
            Err(e @ (ureq::Error::Io(_) | ureq::Error::ConnectionFailed | ureq::Error::HostNotFound)) => {
                return Err(TransportError::Transient(e.to_string()));
            }
            Err(e) => return Err(TransportError::Fatal(e.to_string())),
        };
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| TransportError::Transient(format!("reading response body: {e}")))?;
        match status {
            200..=299 => parse_chat_response(&text),
            429 | 500..=599 => Err(TransportError::Transient(format!("HTTP {status}: {}", snippet(&text)))),
            _ => Err(TransportError::Fatal(format!("HTTP {status}: {}", snippet(&text)))),
        }
    }
}

fn snippet(text: &str) -> &str {
    let end = text.char_indices().nth(300).map_or(text.len(), |(i, _)| i);
    &text[..end]
}
