//! Chat-completion access: the provider trait, retry policy, token estimation
//! and per-call usage accounting.
//!
//! Every agent call goes through [`Gateway::complete`], which retries
//! transport and rate-limit failures and records each attempt on a
//! [`CallTape`]. Pipelines commit a finished tape to the shared [`Ledger`]
//! as either accepted or failed, so calls made for an item that ultimately
//! failed never inflate the accepted totals.

pub mod mock;
#[cfg(feature = "live")]
pub mod openai;

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::UsageStats;

pub use mock::{mock_complete, mock_digest, FaultInjector, MockProvider};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("rate limited: {0}")]
    RateLimited(String),
    #[error("provider error {status}: {message}")]
    Provider { status: u16, message: String },
    #[error("provider returned an empty completion")]
    EmptyCompletion,
    #[error("configuration error: {0}")]
    Config(String),
}

impl GatewayError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, GatewayError::Transport(_) | GatewayError::RateLimited(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    /// Agent system prompt.
    pub system: String,
    /// Rendered task payload.
    pub user: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub model_id: String,
}

impl ChatRequest {
    pub fn new(system: impl Into<String>, user: impl Into<String>) -> Self {
        Self {
            system: system.into(),
            user: user.into(),
            temperature: 0.0,
            max_output_tokens: 1024,
            model_id: String::new(),
        }
    }

    pub fn with_max_output_tokens(mut self, max: u32) -> Self {
        self.max_output_tokens = max;
        self
    }

    pub fn with_model(mut self, model_id: impl Into<String>) -> Self {
        self.model_id = model_id.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    /// Always exactly one call.
    pub usage: UsageStats,
}

/// A chat-completion backend. One `send` is one attempt; retries live in
/// [`Gateway`].
pub trait ChatProvider: Send + Sync {
    fn id(&self) -> &str;

    fn send(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError>;
}

/// Fallback token count: maximal runs of non-whitespace characters.
pub fn estimate_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

/// Ledger bucket for a call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    /// Training-phase explainer, diagnostician and synthesizer calls.
    AssetBuilder,
    /// Test-phase analyzer/refiner calls and single-pass baseline rewrites.
    Optimizer,
    /// Response generation from an optimized prompt.
    Responder,
    Judge,
}

impl Category {
    pub fn name(self) -> &'static str {
        match self {
            Category::AssetBuilder => "asset-builder",
            Category::Optimizer => "optimizer",
            Category::Responder => "responder",
            Category::Judge => "judge",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CallStatus {
    Accepted,
    /// An attempt that failed, or a successful call belonging to an item that
    /// failed later on.
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallRecord {
    pub category: Category,
    pub status: CallStatus,
    pub usage: UsageStats,
}

/// Calls made while processing one item, before they are committed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CallTape {
    records: Vec<CallRecord>,
}

impl CallTape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, category: Category, status: CallStatus, usage: UsageStats) {
        self.records.push(CallRecord {
            category,
            status,
            usage,
        });
    }

    pub fn records(&self) -> &[CallRecord] {
        &self.records
    }

    /// Sum of accepted usage in one category.
    pub fn accepted(&self, category: Category) -> UsageStats {
        self.records
            .iter()
            .filter(|r| r.category == category && r.status == CallStatus::Accepted)
            .map(|r| r.usage)
            .sum()
    }

    pub fn failed_attempts(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.status == CallStatus::Failed)
            .count()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryTotals {
    pub accepted: UsageStats,
    pub failed_attempts: u64,
    /// Usage reported by failed attempts, when the provider reported any.
    pub failed_usage: UsageStats,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerTotals {
    pub categories: BTreeMap<Category, CategoryTotals>,
}

impl LedgerTotals {
    pub fn get(&self, category: Category) -> CategoryTotals {
        self.categories.get(&category).copied().unwrap_or_default()
    }

    pub fn accepted(&self, category: Category) -> UsageStats {
        self.get(category).accepted
    }

    pub fn merge(&mut self, other: &LedgerTotals) {
        for (cat, t) in &other.categories {
            let entry = self.categories.entry(*cat).or_default();
            entry.accepted += t.accepted;
            entry.failed_attempts += t.failed_attempts;
            entry.failed_usage += t.failed_usage;
        }
    }
}

/// Append-only accumulator shared across worker threads.
#[derive(Debug, Default)]
pub struct Ledger {
    entries: Mutex<Vec<CallRecord>>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a tape. When `item_succeeded` is false every call on the tape
    /// is recorded as failed.
    pub fn commit(&self, tape: CallTape, item_succeeded: bool) {
        let mut entries = self.entries.lock().expect("ledger poisoned");
        for mut record in tape.records {
            if !item_succeeded {
                record.status = CallStatus::Failed;
            }
            entries.push(record);
        }
    }

    pub fn entries(&self) -> Vec<CallRecord> {
        self.entries.lock().expect("ledger poisoned").clone()
    }

    pub fn totals(&self) -> LedgerTotals {
        let mut totals = LedgerTotals::default();
        for record in self.entries.lock().expect("ledger poisoned").iter() {
            let entry = totals.categories.entry(record.category).or_default();
            match record.status {
                CallStatus::Accepted => entry.accepted += record.usage,
                CallStatus::Failed => {
                    entry.failed_attempts += 1;
                    entry.failed_usage += record.usage;
                }
            }
        }
        totals
    }
}

/// Exponential backoff with full jitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub factor: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            base_delay: Duration::from_secs(1),
            factor: 2.0,
        }
    }
}

impl RetryPolicy {
    pub fn no_retry() -> Self {
        Self {
            max_attempts: 1,
            ..Self::default()
        }
    }

    /// Upper bound of the wait after failed attempt `attempt` (1-based).
    pub fn backoff_cap(&self, attempt: u32) -> Duration {
        let exp = self.factor.powi(attempt.saturating_sub(1) as i32);
        self.base_delay.mul_f64(exp)
    }
}

#[cfg(feature = "live")]
fn full_jitter(cap: Duration) -> Duration {
    use rand::Rng;
    if cap.is_zero() {
        return cap;
    }
    cap.mul_f64(rand::rng().random_range(0.0..=1.0))
}

// No entropy source is wired up without the live feature; wait the full cap.
#[cfg(not(feature = "live"))]
fn full_jitter(cap: Duration) -> Duration {
    cap
}

pub trait Sleeper: Send + Sync {
    fn sleep(&self, duration: Duration);
}

#[derive(Debug, Default, Clone, Copy)]
pub struct ThreadSleeper;

impl Sleeper for ThreadSleeper {
    fn sleep(&self, duration: Duration) {
        std::thread::sleep(duration);
    }
}

/// Provider plus retry policy.
#[derive(Clone)]
pub struct Gateway {
    provider: Arc<dyn ChatProvider>,
    retry: RetryPolicy,
    sleeper: Arc<dyn Sleeper>,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway")
            .field("provider", &self.provider.id())
            .field("retry", &self.retry)
            .finish()
    }
}

impl Gateway {
    pub fn new(provider: Arc<dyn ChatProvider>) -> Self {
        Self {
            provider,
            retry: RetryPolicy::default(),
            sleeper: Arc::new(ThreadSleeper),
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_sleeper(mut self, sleeper: Arc<dyn Sleeper>) -> Self {
        self.sleeper = sleeper;
        self
    }

    pub fn provider_id(&self) -> &str {
        self.provider.id()
    }

    /// Sends `request`, retrying retryable failures, and records every
    /// attempt on `tape` under `category`.
    pub fn complete(
        &self,
        request: &ChatRequest,
        category: Category,
        tape: &mut CallTape,
    ) -> Result<ChatResponse, GatewayError> {
        let attempts = self.retry.max_attempts.max(1);
        let mut attempt = 1;
        loop {
            match self.provider.send(request) {
                Ok(response) if response.text.trim().is_empty() => {
                    tape.push(category, CallStatus::Failed, response.usage);
                    return Err(GatewayError::EmptyCompletion);
                }
                Ok(response) => {
                    tape.push(category, CallStatus::Accepted, response.usage);
                    return Ok(response);
                }
                Err(err) => {
                    tape.push(category, CallStatus::Failed, UsageStats::default());
                    if !err.is_retryable() || attempt >= attempts {
                        return Err(err);
                    }
                    let cap = self.retry.backoff_cap(attempt);
                    let wait = full_jitter(cap);
                    log::debug!(
                        "{} attempt {attempt} failed ({err}); retrying in {wait:?}",
                        self.provider.id()
                    );
                    self.sleeper.sleep(wait);
                    attempt += 1;
                }
            }
        }
    }
}
