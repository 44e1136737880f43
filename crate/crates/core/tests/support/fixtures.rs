//! Shared builders and an instrumented mock provider.

#![allow(dead_code)]

use std::sync::{Arc, Mutex};

use assetopt::agents::{Agents, TemplateSet};
use assetopt::gateway::{ChatProvider, ChatRequest, ChatResponse, Gateway, GatewayError, MockProvider, RetryPolicy};
use assetopt::model::{PromptRecord, ScoreVector, TrainingInstance, UsageStats};
use assetopt::store::{Corpus, CorpusRecord};

/// Mock provider that keeps every request and the usage it reported.
pub struct Recorder {
    inner: MockProvider,
    pub seen: Mutex<Vec<(ChatRequest, UsageStats)>>,
}

impl Recorder {
    pub fn new(seed: u64) -> Arc<Self> {
        Arc::new(Self {
            inner: MockProvider::new(seed),
            seen: Mutex::new(Vec::new()),
        })
    }

    pub fn requests(&self) -> Vec<ChatRequest> {
        self.seen.lock().unwrap().iter().map(|(r, _)| r.clone()).collect()
    }

    pub fn usage_total(&self) -> UsageStats {
        self.seen.lock().unwrap().iter().map(|(_, u)| *u).sum()
    }

    pub fn count(&self) -> usize {
        self.seen.lock().unwrap().len()
    }
}

impl ChatProvider for Recorder {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn send(&self, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let response = self.inner.send(request)?;
        self.seen.lock().unwrap().push((request.clone(), response.usage));
        Ok(response)
    }
}

pub fn agents_for(provider: Arc<dyn ChatProvider>) -> Agents {
    Agents::new(
        Gateway::new(provider).with_retry(RetryPolicy::no_retry()),
        Arc::new(TemplateSet::builtin()),
    )
}

pub fn mock_agents(seed: u64) -> Agents {
    agents_for(Arc::new(MockProvider::new(seed)))
}

pub fn instance(id: &str, prompt: &str, response: &str, scores: [f64; 5]) -> TrainingInstance {
    TrainingInstance {
        prompt: PromptRecord::single(id, prompt).unwrap(),
        response: response.into(),
        scores: ScoreVector::new(scores).unwrap(),
    }
}

const TOPICS: [&str; 10] = [
    "river deltas", "bread baking", "sorting algorithms", "tidal forces", "tax filing",
    "garden soil", "guitar chords", "solar panels", "vaccine trials", "chess openings",
];

/// `n` training records over a fixed topic list, scores varying with the
/// ordinal.
pub fn training_records(n: usize) -> Vec<CorpusRecord> {
    (0..n)
        .map(|i| {
            let topic = TOPICS[i % TOPICS.len()];
            let s = (i % 5) as f64;
            let mut r = CorpusRecord::new(instance(
                &format!("t{i}"),
                &format!("Question {i}: explain {topic} for a beginner"),
                &format!("Here is a short note on {topic} number {i}."),
                [s, 4.0 - s, 3.0, (s + 1.0).min(4.0), 2.0],
            ));
            r.created_at = "2024-01-01T00:00:00Z".into();
            r
        })
        .collect()
}

pub fn corpus(n: usize) -> Corpus {
    Corpus::from_records(training_records(n)).unwrap()
}

pub fn prompts(n: usize) -> Vec<PromptRecord> {
    (0..n)
        .map(|i| {
            let topic = TOPICS[(i * 3) % TOPICS.len()];
            PromptRecord::single(format!("p{i}"), format!("Help me understand {topic} quickly")).unwrap()
        })
        .collect()
}
