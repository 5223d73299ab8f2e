use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

use super::{EmbeddingProvider, EmbeddingVector};

/// Settings for an HTTP batch-embedding endpoint.
///
/// The request body is `{"model": ..., "input": [texts]}`. The response may be
/// OpenAI shaped (`{"data": [{"embedding": [...]}]}`), `{"embeddings": [[...]]}`
/// or a bare array of arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpEmbedderConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: Option<String>,
    pub timeout_secs: u64,
    pub max_retries: u32,
}

impl Default for HttpEmbedderConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            model: String::new(),
            api_key_env: None,
            timeout_secs: 60,
            max_retries: 3,
        }
    }
}

pub struct HttpEmbedder {
    config: HttpEmbedderConfig,
    client: reqwest::blocking::Client,
    token: Option<String>,
}

impl HttpEmbedder {
    pub fn new(config: HttpEmbedderConfig) -> Result<Self> {
        let client = http_client(config.timeout_secs)?;
        let token = read_token(config.api_key_env.as_deref())?;
        Ok(Self {
            config,
            client,
            token,
        })
    }
}

pub(crate) fn http_client(timeout_secs: u64) -> Result<reqwest::blocking::Client> {
    reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(timeout_secs))
        .build()
        .map_err(|e| Error::Provider {
            message: format!("cannot build HTTP client: {e}"),
            retryable: false,
        })
}

pub(crate) fn read_token(var: Option<&str>) -> Result<Option<String>> {
    match var {
        None => Ok(None),
        Some(var) => std::env::var(var)
            .map(Some)
            .map_err(|_| Error::InvalidInput(format!("environment variable `{var}` is not set"))),
    }
}

/// POSTs `body` and returns the decoded JSON, retrying transient failures
/// with exponential backoff.
pub(crate) fn post_json(
    client: &reqwest::blocking::Client,
    endpoint: &str,
    token: Option<&str>,
    body: &Value,
    max_retries: u32,
) -> Result<Value> {
    let mut attempt = 0;
    loop {
        match post_once(client, endpoint, token, body) {
            Err(e) if e.is_retryable() && attempt < max_retries => {
                attempt += 1;
                log::warn!("{endpoint}: {e}; retry {attempt}/{max_retries}");
                std::thread::sleep(Duration::from_millis(250 << attempt.min(6)));
            }
            other => return other,
        }
    }
}

fn post_once(
    client: &reqwest::blocking::Client,
    endpoint: &str,
    token: Option<&str>,
    body: &Value,
) -> Result<Value> {
    let mut req = client.post(endpoint).json(body);
    if let Some(token) = token {
        req = req.bearer_auth(token);
    }
    let resp = req.send().map_err(|e| Error::Provider {
        message: e.to_string(),
        retryable: e.is_timeout() || e.is_connect() || e.is_request(),
    })?;
    let status = resp.status();
    if !status.is_success() {
        let text = resp.text().unwrap_or_default();
        return Err(Error::Provider {
            message: format!(
                "HTTP {status}: {}",
                text.chars().take(300).collect::<String>()
            ),
            retryable: status.is_server_error() || status.as_u16() == 429,
        });
    }
    resp.json::<Value>().map_err(|e| Error::Provider {
        message: format!("invalid JSON response: {e}"),
        retryable: false,
    })
}

pub(crate) fn parse_embeddings(value: &Value) -> Result<Vec<EmbeddingVector>> {
    let bad = |m: &str| Error::Provider {
        message: format!("unexpected embedding response: {m}"),
        retryable: false,
    };
    let rows: Vec<&Value> = if let Some(data) = value.get("data").and_then(Value::as_array) {
        let mut rows: Vec<(u64, &Value)> = data
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let index = d.get("index").and_then(Value::as_u64).unwrap_or(i as u64);
                d.get("embedding")
                    .map(|e| (index, e))
                    .ok_or_else(|| bad("missing `embedding`"))
            })
            .collect::<Result<_>>()?;
        rows.sort_by_key(|(i, _)| *i);
        rows.into_iter().map(|(_, e)| e).collect()
    } else if let Some(e) = value.get("embeddings").and_then(Value::as_array) {
        e.iter().collect()
    } else if let Some(e) = value.as_array() {
        e.iter().collect()
    } else {
        return Err(bad("no `data` or `embeddings` field"));
    };
    rows.into_iter()
        .map(|row| {
            let values: Vec<f64> =
                serde_json::from_value(row.clone()).map_err(|_| bad("non-numeric vector"))?;
            EmbeddingVector::new(values)
        })
        .collect()
}

impl EmbeddingProvider for HttpEmbedder {
    fn model_id(&self) -> &str {
        &self.config.model
    }

    fn dimension(&self) -> Option<usize> {
        None
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>> {
        let body = serde_json::json!({ "model": self.config.model, "input": texts });
        let value = post_json(
            &self.client,
            &self.config.endpoint,
            self.token.as_deref(),
            &body,
            self.config.max_retries,
        )?;
        let vectors = parse_embeddings(&value)?;
        if vectors.len() != texts.len() {
            return Err(Error::Provider {
                message: format!(
                    "asked for {} embeddings, got {}",
                    texts.len(),
                    vectors.len()
                ),
                retryable: false,
            });
        }
        Ok(vectors)
    }
}
