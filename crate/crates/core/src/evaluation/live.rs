//! Judge backed by an HTTP scoring endpoint.
//!
//! The endpoint receives `{"prompt": ..., "response": ...}` and answers with a
//! JSON object holding the five metric names as numbers, either at the top
//! level or under `"scores"`.

use std::time::Duration;

use serde_json::{json, Value};

use super::{EvalError, Judge, JudgeVerdict, SCORE_SCALE};
use crate::gateway::{estimate_tokens, CallStatus, CallTape, Category};
use crate::model::{Metric, PromptRecord, ScoreVector, UsageStats};

/// Scale the endpoint reports on. Never inferred from the values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JudgeScale {
    /// Already 0–4.
    Raw,
    /// 0–1 per objective; multiplied by 4.
    Unit,
}

impl std::str::FromStr for JudgeScale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw" | "0-4" => Ok(JudgeScale::Raw),
            "unit" | "0-1" => Ok(JudgeScale::Unit),
            other => Err(format!("unknown judge scale `{other}` (expected raw or unit)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LiveJudgeConfig {
    pub endpoint: String,
    pub api_key: Option<String>,
    pub scale: JudgeScale,
    pub timeout: Duration,
}

pub struct LiveJudge {
    id: String,
    config: LiveJudgeConfig,
    client: reqwest::blocking::Client,
}

impl LiveJudge {
    pub fn new(config: LiveJudgeConfig) -> Result<Self, EvalError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| EvalError::JudgeTransport(e.to_string()))?;
        Ok(Self {
            id: format!("live:{}", config.endpoint),
            config,
            client,
        })
    }

    fn request(&self, prompt: &str, response: &str) -> Result<Value, EvalError> {
        let mut builder = self
            .client
            .post(&self.config.endpoint)
            .json(&json!({ "prompt": prompt, "response": response }));
        if let Some(key) = &self.config.api_key {
            builder = builder.bearer_auth(key);
        }
        let reply = builder
            .send()
            .map_err(|e| EvalError::JudgeTransport(e.to_string()))?;
        let status = reply.status();
        let body = reply
            .text()
            .map_err(|e| EvalError::JudgeTransport(e.to_string()))?;
        if !status.is_success() {
            return Err(EvalError::JudgeTransport(format!("HTTP {status}: {body}")));
        }
        serde_json::from_str(&body).map_err(|_| EvalError::JudgeOutputUnparseable(body))
    }
}

/// Extracts the five scores from an endpoint reply and applies `scale`.
pub fn parse_verdict(body: &Value, scale: JudgeScale) -> Result<ScoreVector, EvalError> {
    let scores = body.get("scores").unwrap_or(body);
    let mut values = [0.0; 5];
    for (slot, metric) in values.iter_mut().zip(Metric::ALL) {
        let v = scores
            .get(metric.name())
            .and_then(Value::as_f64)
            .ok_or_else(|| {
                EvalError::JudgeOutputUnparseable(format!("missing `{}` in {body}", metric.name()))
            })?;
        *slot = match scale {
            JudgeScale::Raw => v,
            JudgeScale::Unit => v * SCORE_SCALE,
        };
    }
    Ok(ScoreVector::new(values)?)
}

impl Judge for LiveJudge {
    fn id(&self) -> &str {
        &self.id
    }

    fn judge(
        &self,
        prompt: &PromptRecord,
        response: &str,
        tape: &mut CallTape,
    ) -> Result<JudgeVerdict, EvalError> {
        if response.is_empty() {
            return Err(EvalError::EmptyResponse);
        }
        let usage = UsageStats::one_call(estimate_tokens(&prompt.text) + estimate_tokens(response), 0);
        let outcome = self
            .request(&prompt.text, response)
            .and_then(|body| parse_verdict(&body, self.config.scale));
        match outcome {
            Ok(scores) => {
                tape.push(Category::Judge, CallStatus::Accepted, usage);
                Ok(JudgeVerdict {
                    scores,
                    judge_id: self.id.clone(),
                })
            }
            Err(e) => {
                tape.push(Category::Judge, CallStatus::Failed, UsageStats::default());
                Err(e)
            }
        }
    }
}
