//! The model boundary: deterministic replay from a [`ReplayStore`], or a
//! live HTTP chat endpoint.

use std::fs;
use std::path::PathBuf;
use std::time::Duration;

use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::store::{prompt_hash, ReplayKey, ReplayStore, StoreError};

/// One image-grounded chat turn.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub model_id: String,
    /// Language for reconstruction, inference mode for QA.
    pub scope: String,
    /// Scene id or question id.
    pub item: String,
    pub image: Option<PathBuf>,
    pub system: String,
    pub user: String,
    pub temperature: f64,
    pub max_new_tokens: u32,
}

impl ChatRequest {
    pub fn replay_key(&self) -> ReplayKey {
        ReplayKey {
            model_id: self.model_id.clone(),
            scope: self.scope.clone(),
            item: self.item.clone(),
            prompt_hash: prompt_hash(&self.system, &self.user),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatResponse {
    pub text: String,
    /// Attempts beyond the first.
    pub retries: u32,
}

#[derive(Debug, Error)]
pub enum ClientError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("http: {0}")]
    Http(String),
    #[error("image {path}: {message}")]
    Image { path: PathBuf, message: String },
    #[error("credentials: environment variable {0} is not set")]
    MissingCredentials(String),
    #[error("unexpected response shape: {0}")]
    Shape(String),
}

pub trait ModelClient: Sync {
    fn send(&self, request: &ChatRequest) -> Result<ChatResponse, ClientError>;

    /// False for replay, whose snapshots must not carry wall-clock time.
    fn is_live(&self) -> bool {
        false
    }
}

pub struct ReplayClient {
    store: ReplayStore,
}

impl ReplayClient {
    pub fn new(store: ReplayStore) -> Self {
        ReplayClient { store }
    }
}

impl ModelClient for ReplayClient {
    fn send(&self, request: &ChatRequest) -> Result<ChatResponse, ClientError> {
        Ok(ChatResponse {
            text: self.store.lookup(&request.replay_key())?,
            retries: 0,
        })
    }
}

/// Request shape spoken by the endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provider {
    /// `POST {endpoint}/chat/completions` with bearer auth.
    OpenaiCompatible,
    /// `POST {endpoint}/v1/messages` with an `x-api-key` header.
    Anthropic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveConfig {
    pub provider: Provider,
    pub endpoint: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    #[serde(default)]
    pub max_retries: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_timeout() -> u64 {
    300
}

pub struct LiveClient {
    config: LiveConfig,
    api_key: String,
    agent: ureq::Agent,
}

fn media_type(path: &std::path::Path) -> &'static str {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("webp") => "image/webp",
        _ => "image/png",
    }
}

fn encoded_image(path: &std::path::Path) -> Result<(String, &'static str), ClientError> {
    let bytes = fs::read(path).map_err(|e| ClientError::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok((
        base64::engine::general_purpose::STANDARD.encode(bytes),
        media_type(path),
    ))
}

/// Provider-specific JSON body for `request`.
pub fn request_body(provider: Provider, request: &ChatRequest) -> Result<Value, ClientError> {
    let image = request.image.as_deref().map(encoded_image).transpose()?;
    Ok(match provider {
        Provider::OpenaiCompatible => {
            let mut content = vec![json!({"type": "text", "text": request.user})];
            if let Some((data, mt)) = image {
                content.insert(0, json!({"type": "image_url", "image_url": {"url": format!("data:{mt};base64,{data}")}}));
            }
            json!({
                "model": request.model_id,
                "temperature": request.temperature,
                "max_tokens": request.max_new_tokens,
                "messages": [
                    {"role": "system", "content": request.system},
                    {"role": "user", "content": content},
                ],
            })
        }
        Provider::Anthropic => {
            let mut content = vec![json!({"type": "text", "text": request.user})];
            if let Some((data, mt)) = image {
                content.insert(0, json!({"type": "image", "source": {"type": "base64", "media_type": mt, "data": data}}));
            }
            json!({
                "model": request.model_id,
                "temperature": request.temperature,
                "max_tokens": request.max_new_tokens,
                "system": request.system,
                "messages": [{"role": "user", "content": content}],
            })
        }
    })
}

/// Response text from a provider reply.
pub fn response_text(provider: Provider, reply: &Value) -> Result<String, ClientError> {
    let text = match provider {
        Provider::OpenaiCompatible => reply
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string),
        Provider::Anthropic => reply
            .get("content")
            .and_then(Value::as_array)
            .map(|blocks| {
                blocks
                    .iter()
                    .filter_map(|b| b.get("text").and_then(Value::as_str))
                    .collect::<Vec<_>>()
                    .join("")
            }),
    };
    text.ok_or_else(|| ClientError::Shape(reply.to_string().chars().take(200).collect()))
}

impl LiveClient {
    pub fn new(config: LiveConfig) -> Result<Self, ClientError> {
        let api_key = std::env::var(&config.api_key_env)
            .map_err(|_| ClientError::MissingCredentials(config.api_key_env.clone()))?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build()
            .into();
        Ok(LiveClient {
            config,
            api_key,
            agent,
        })
    }

    fn attempt(&self, body: &Value) -> Result<String, ClientError> {
        let base = self.config.endpoint.trim_end_matches('/');
        let http = |e: ureq::Error| ClientError::Http(e.to_string());
        let mut reply = match self.config.provider {
            Provider::OpenaiCompatible => self
                .agent
                .post(&format!("{base}/chat/completions"))
                .header("Authorization", &format!("Bearer {}", self.api_key))
                .send_json(body)
                .map_err(http)?,
            Provider::Anthropic => self
                .agent
                .post(&format!("{base}/v1/messages"))
                .header("x-api-key", &self.api_key)
                .header("anthropic-version", "2023-06-01")
                .send_json(body)
                .map_err(http)?,
        };
        let value: Value = reply.body_mut().read_json().map_err(http)?;
        response_text(self.config.provider, &value)
    }
}

impl ModelClient for LiveClient {
    /// Retries are bounded by `max_retries` and reported in the response.
    fn send(&self, request: &ChatRequest) -> Result<ChatResponse, ClientError> {
        let body = request_body(self.config.provider, request)?;
        let mut retries = 0;
        loop {
            match self.attempt(&body) {
                Ok(text) => return Ok(ChatResponse { text, retries }),
                Err(e) if retries >= self.config.max_retries => return Err(e),
                Err(_) => retries += 1,
            }
        }
    }

    fn is_live(&self) -> bool {
        true
    }
}

/// Forwards to `inner` and records every successful response.
pub struct TeeClient<C> {
    pub inner: C,
    pub store: ReplayStore,
}

impl<C: ModelClient> ModelClient for TeeClient<C> {
    fn send(&self, request: &ChatRequest) -> Result<ChatResponse, ClientError> {
        let response = self.inner.send(request)?;
        self.store
            .record(&request.replay_key(), &response.text, response.retries)?;
        Ok(response)
    }

    fn is_live(&self) -> bool {
        self.inner.is_live()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req() -> ChatRequest {
        ChatRequest {
            model_id: "m".into(),
            scope: "direct".into(),
            item: "s_q0".into(),
            image: None,
            system: "sys".into(),
            user: "How many?".into(),
            temperature: 0.0,
            max_new_tokens: 256,
        }
    }

    #[test]
    fn bodies_per_provider() {
        let b = request_body(Provider::OpenaiCompatible, &req()).unwrap();
        assert_eq!(b["messages"][0]["content"], "sys");
        assert_eq!(b["max_tokens"], 256);
        let a = request_body(Provider::Anthropic, &req()).unwrap();
        assert_eq!(a["system"], "sys");
        assert_eq!(a["messages"][0]["content"][0]["text"], "How many?");
    }

    #[test]
    fn image_is_inlined() {
        let dir = tempfile::tempdir().unwrap();
        let img = dir.path().join("v0.png");
        fs::write(&img, [1u8, 2, 3]).unwrap();
        let mut r = req();
        r.image = Some(img);
        let b = request_body(Provider::OpenaiCompatible, &r).unwrap();
        assert_eq!(
            b["messages"][1]["content"][0]["image_url"]["url"],
            "data:image/png;base64,AQID"
        );
    }

    #[test]
    fn reply_text() {
        let o = json!({"choices": [{"message": {"content": "4"}}]});
        assert_eq!(response_text(Provider::OpenaiCompatible, &o).unwrap(), "4");
        let a = json!({"content": [{"type": "text", "text": "Final "}, {"type": "text", "text": "answer: 4"}]});
        assert_eq!(
            response_text(Provider::Anthropic, &a).unwrap(),
            "Final answer: 4"
        );
        assert!(response_text(Provider::Anthropic, &json!({})).is_err());
    }

    #[test]
    fn max_tokens_do_not_enter_the_key() {
        let mut r = req();
        let k = r.replay_key();
        r.max_new_tokens = 2048;
        assert_eq!(r.replay_key(), k);
    }
}
