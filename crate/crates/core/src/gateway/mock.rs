//! Deterministic offline provider.
//!
//! The completion is a pure function of `(seed, system, user)`. Each output
//! starts with a tag carrying a digest of all three inputs, so a test can
//! tell whether an upstream value reached a downstream agent by checking
//! whether the downstream text changed. The body echoes words from the user
//! payload and adapts its layout to what the system prompt asks for: fenced
//! `ANALYSIS`/`OPTIMIZED_PROMPT` sections, a numbered list, or plain text.

use std::sync::Arc;

use super::{estimate_tokens, ChatProvider, ChatRequest, ChatResponse, GatewayError};
use crate::digest::sha256_parts;
use crate::model::UsageStats;

/// Words taken from each end of the user payload.
const ECHO_WORDS: usize = 16;

#[derive(Debug, Clone)]
pub struct MockProvider {
    id: String,
    seed: u64,
}

impl MockProvider {
    pub fn new(seed: u64) -> Self {
        Self {
            id: "mock".into(),
            seed,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl ChatProvider for MockProvider {
    fn id(&self) -> &str {
        &self.id
    }

    fn send(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        Ok(mock_complete(request, self.seed))
    }
}

/// 16-hex-digit digest of the inputs that determine a mock completion.
pub fn mock_digest(request: &ChatRequest, seed: u64) -> String {
    let full = sha256_parts(&[
        &seed.to_le_bytes(),
        request.system.as_bytes(),
        request.user.as_bytes(),
    ]);
    full[..16].to_string()
}

fn echo(user: &str) -> String {
    let words: Vec<&str> = user.split_whitespace().collect();
    if words.len() <= 2 * ECHO_WORDS {
        return words.join(" ");
    }
    let mut picked = words[..ECHO_WORDS].to_vec();
    picked.extend_from_slice(&words[words.len() - ECHO_WORDS..]);
    picked.join(" ")
}

pub fn mock_complete(request: &ChatRequest, seed: u64) -> ChatResponse {
    let digest = mock_digest(request, seed);
    let body = echo(&request.user);
    let text = if request.system.contains("```OPTIMIZED_PROMPT") {
        format!(
            "```ANALYSIS\n[mock {digest}] analysis: {body}\n```\n\
             ```OPTIMIZED_PROMPT\n[mock {digest}] {body}\n```"
        )
    } else if request.system.contains("numbered list") {
        format!(
            "1. [mock {digest}] keep the original goal\n\
             2. [mock {digest}] clarify scope and audience\n\
             3. [mock {digest}] address: {body}"
        )
    } else {
        format!("[mock {digest}] {body}")
    };
    let input = estimate_tokens(&request.system) + estimate_tokens(&request.user);
    let output = estimate_tokens(&text);
    ChatResponse {
        text,
        usage: UsageStats::one_call(input, output),
    }
}

/// Wraps a provider and fails any request whose user payload contains one of
/// the configured markers.
pub struct FaultInjector {
    inner: Arc<dyn ChatProvider>,
    rules: Vec<(String, GatewayError)>,
}

impl FaultInjector {
    pub fn new(inner: Arc<dyn ChatProvider>) -> Self {
        Self {
            inner,
            rules: Vec::new(),
        }
    }

    /// Requests whose system prompt or user payload contains `marker` fail
    /// with `error`.
    pub fn fail_when(mut self, marker: impl Into<String>, error: GatewayError) -> Self {
        self.rules.push((marker.into(), error));
        self
    }
}

impl ChatProvider for FaultInjector {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn send(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        for (marker, error) in &self.rules {
            if request.user.contains(marker.as_str()) || request.system.contains(marker.as_str())
            {
                return Err(error.clone());
            }
        }
        self.inner.send(request)
    }
}
