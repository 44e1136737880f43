//! Blocking client for OpenAI-compatible `/chat/completions` endpoints.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{estimate_tokens, ChatProvider, ChatRequest, ChatResponse, GatewayError};
use crate::model::UsageStats;

pub const DEFAULT_BASE_URL: &str = "https://api.openai.com/v1";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, Clone)]
pub struct OpenAiConfig {
    /// Base URL up to and including the version segment, e.g. `.../v1`.
    pub base_url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
}

impl OpenAiConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model: model.into(),
            api_key: None,
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: Vec<WireMessage<'a>>,
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct WireResponse {
    #[serde(default)]
    choices: Vec<WireChoice>,
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireChoiceMessage,
}

#[derive(Deserialize)]
struct WireChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    prompt_tokens: Option<u64>,
    completion_tokens: Option<u64>,
}

pub struct OpenAiProvider {
    id: String,
    config: OpenAiConfig,
    client: reqwest::blocking::Client,
}

impl OpenAiProvider {
    pub fn new(config: OpenAiConfig) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| GatewayError::Config(e.to_string()))?;
        Ok(Self {
            id: format!("openai:{}", config.model),
            config,
            client,
        })
    }

    fn endpoint(&self) -> String {
        format!(
            "{}/chat/completions",
            self.config.base_url.trim_end_matches('/')
        )
    }
}

impl ChatProvider for OpenAiProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn send(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let model = if request.model_id.is_empty() {
            self.config.model.as_str()
        } else {
            request.model_id.as_str()
        };
        let body = WireRequest {
            model,
            messages: vec![
                WireMessage {
                    role: "system",
                    content: &request.system,
                },
                WireMessage {
                    role: "user",
                    content: &request.user,
                },
            ],
            temperature: request.temperature,
            max_tokens: request.max_output_tokens,
        };
        let mut builder = self.client.post(self.endpoint()).json(&body);
        if let Some(key) = &self.config.api_key {
            builder = builder.bearer_auth(key);
        }
        let response = builder
            .send()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        let status = response.status();
        let text = response
            .text()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        if status.as_u16() == 429 {
            return Err(GatewayError::RateLimited(text));
        }
        if !status.is_success() {
            return Err(GatewayError::Provider {
                status: status.as_u16(),
                message: text,
            });
        }
        let wire: WireResponse = serde_json::from_str(&text).map_err(|e| {
            GatewayError::Provider {
                status: status.as_u16(),
                message: format!("malformed completion body: {e}"),
            }
        })?;
        let content = wire
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .unwrap_or_default();
        if content.trim().is_empty() {
            return Err(GatewayError::EmptyCompletion);
        }
        let reported = wire.usage.unwrap_or(WireUsage {
            prompt_tokens: None,
            completion_tokens: None,
        });
        let input = reported.prompt_tokens.unwrap_or_else(|| {
            estimate_tokens(&request.system) + estimate_tokens(&request.user)
        });
        let output = reported
            .completion_tokens
            .unwrap_or_else(|| estimate_tokens(&content));
        Ok(ChatResponse {
            text: content,
            usage: UsageStats::one_call(input, output),
        })
    }
}
