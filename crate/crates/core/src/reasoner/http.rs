use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{DecodingParams, ReasonerProvider};
use crate::error::{Error, Result};
use crate::retrieval::http::{http_client, post_json, read_token};

/// Settings for a chat-completions endpoint.
///
/// Requests are `{"model", "messages": [{"role": "user", ...}], "temperature",
/// "max_tokens"}`. The answer is read from `choices[0].message.content`, or
/// from a top-level `response` or `text` field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpReasonerConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: Option<String>,
    pub timeout_secs: u64,
    pub max_retries: u32,
}

impl Default for HttpReasonerConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            model: String::new(),
            api_key_env: None,
            timeout_secs: 120,
            max_retries: 3,
        }
    }
}

pub struct HttpReasoner {
    config: HttpReasonerConfig,
    client: reqwest::blocking::Client,
    token: Option<String>,
}

impl HttpReasoner {
    pub fn new(config: HttpReasonerConfig) -> Result<Self> {
        if config.endpoint.is_empty() || config.model.is_empty() {
            return Err(Error::InvalidInput(
                "reasoner endpoint and model must be set".into(),
            ));
        }
        let client = http_client(config.timeout_secs)?;
        let token = read_token(config.api_key_env.as_deref())?;
        Ok(Self {
            config,
            client,
            token,
        })
    }
}

fn extract_text(value: &Value) -> Result<String> {
    let text = value
        .pointer("/choices/0/message/content")
        .or_else(|| value.pointer("/choices/0/text"))
        .or_else(|| value.get("response"))
        .or_else(|| value.get("text"))
        .and_then(Value::as_str);
    text.map(str::to_string).ok_or_else(|| Error::Provider {
        message: "completion response has no text".into(),
        retryable: false,
    })
}

impl ReasonerProvider for HttpReasoner {
    fn model_id(&self) -> &str {
        &self.config.model
    }

    fn complete(&self, prompt: &str, params: &DecodingParams) -> Result<String> {
        let body = serde_json::json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "max_tokens": params.max_output_tokens,
        });
        let value = post_json(
            &self.client,
            &self.config.endpoint,
            self.token.as_deref(),
            &body,
            self.config.max_retries,
        )?;
        extract_text(&value)
    }
}
