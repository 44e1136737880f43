//! Scoring math, judges and aggregate reports.

#[cfg(feature = "live")]
pub mod live;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::CallTape;
use crate::model::{Metric, ModelError, OptimizationResult, PromptRecord, ScoreVector, UsageStats};
use crate::retrieval::tokenize;

pub const SCORE_SCALE: f64 = 4.0;

/// Tolerance for the two routes to the composite mean.
pub const COMPOSITE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("score {0} is outside [0, 4]")]
    ScoreOutOfRange(f64),
    #[error("invalid judge scores: {0}")]
    InvalidScores(#[from] ModelError),
    #[error("no results to aggregate")]
    EmptyResults,
    #[error("result `{0}` has no judged scores")]
    Unjudged(String),
    #[error("response is empty")]
    EmptyResponse,
    #[error("judge output unparseable: {0}")]
    JudgeOutputUnparseable(String),
    #[error("judge request failed: {0}")]
    JudgeTransport(String),
    #[error("aggregate invariant violated: {0}")]
    Invariant(String),
}

/// Maps a raw 0–4 score onto [0, 1].
pub fn normalize_score(raw: f64) -> Result<f64, EvalError> {
    if !(0.0..=SCORE_SCALE).contains(&raw) {
        return Err(EvalError::ScoreOutOfRange(raw));
    }
    Ok(raw / SCORE_SCALE)
}

/// Equal-weight mean of the five normalized metrics.
pub fn composite_score(scores: &ScoreVector) -> f64 {
    mean_of_normalized(normalized(scores))
}

/// Mean of five values that are already on the [0, 1] scale.
pub fn mean_of_normalized(values: [f64; 5]) -> f64 {
    values.iter().sum::<f64>() / 5.0
}

fn normalized(scores: &ScoreVector) -> [f64; 5] {
    scores.to_array().map(|v| v / SCORE_SCALE)
}

/// Sum that does not depend on input order.
fn ordered_sum(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

/// Per-metric means on the [0, 1] scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricMeans {
    pub helpfulness: f64,
    pub correctness: f64,
    pub coherence: f64,
    pub complexity: f64,
    pub verbosity: f64,
}

impl MetricMeans {
    pub fn from_array(v: [f64; 5]) -> Self {
        Self {
            helpfulness: v[0],
            correctness: v[1],
            coherence: v[2],
            complexity: v[3],
            verbosity: v[4],
        }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [
            self.helpfulness,
            self.correctness,
            self.coherence,
            self.complexity,
            self.verbosity,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_metric: MetricMeans,
    pub composite: f64,
    pub n: usize,
    /// Judge-call usage.
    pub usage: UsageStats,
}

/// Aggregates raw score vectors. Both routes to the composite mean are
/// computed and must agree.
pub fn aggregate_scores(scores: &[ScoreVector], usage: UsageStats) -> Result<EvalReport, EvalError> {
    if scores.is_empty() {
        return Err(EvalError::EmptyResults);
    }
    for s in scores {
        s.validate()?;
    }
    let n = scores.len() as f64;
    let per_metric = Metric::ALL.map(|m| {
        ordered_sum(scores.iter().map(|s| s.get(m) / SCORE_SCALE).collect()) / n
    });
    let mean_of_composites = ordered_sum(scores.iter().map(composite_score).collect()) / n;
    let composite_of_means = mean_of_normalized(per_metric);
    if (mean_of_composites - composite_of_means).abs() > COMPOSITE_TOLERANCE {
        return Err(EvalError::Invariant(format!(
            "mean of composites {mean_of_composites} != composite of means {composite_of_means}"
        )));
    }
    Ok(EvalReport {
        per_metric: MetricMeans::from_array(per_metric),
        composite: mean_of_composites,
        n: scores.len(),
        usage,
    })
}

/// Aggregates judged optimization results.
pub fn aggregate(results: &[OptimizationResult], usage: UsageStats) -> Result<EvalReport, EvalError> {
    let scores = results
        .iter()
        .map(|r| r.judged.ok_or_else(|| EvalError::Unjudged(r.original.id.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    aggregate_scores(&scores, usage)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub scores: ScoreVector,
    pub judge_id: String,
}

pub trait Judge: Send + Sync {
    fn id(&self) -> &str;

    /// Scores `response` as an answer to `prompt`. Calls, if any, go on `tape`.
    fn judge(
        &self,
        prompt: &PromptRecord,
        response: &str,
        tape: &mut CallTape,
    ) -> Result<JudgeVerdict, EvalError>;
}

/// Deterministic rule-based judge that makes no calls.
///
/// With `o` the fraction of distinct prompt tokens that also appear in the
/// response: helpfulness `4o`, correctness `2 + 2o`, coherence `4`,
/// complexity `4o²`, verbosity `min(4, words / 50)`.
#[derive(Debug, Clone, Default)]
pub struct MockJudge;

impl MockJudge {
    pub fn new() -> Self {
        Self
    }

    pub fn overlap(prompt: &str, response: &str) -> f64 {
        let prompt_terms: BTreeSet<String> = tokenize(prompt).into_iter().collect();
        if prompt_terms.is_empty() {
            return 0.0;
        }
        let response_terms: BTreeSet<String> = tokenize(response).into_iter().collect();
        let shared = prompt_terms.intersection(&response_terms).count();
        shared as f64 / prompt_terms.len() as f64
    }

    pub fn score(prompt: &str, response: &str) -> [f64; 5] {
        let o = Self::overlap(prompt, response);
        let words = response.split_whitespace().count() as f64;
        [
            SCORE_SCALE * o,
            2.0 + 2.0 * o,
            SCORE_SCALE,
            SCORE_SCALE * o * o,
            (words / 50.0).min(SCORE_SCALE),
        ]
    }
}

impl Judge for MockJudge {
    fn id(&self) -> &str {
        "mock"
    }

    fn judge(
        &self,
        prompt: &PromptRecord,
        response: &str,
        _tape: &mut CallTape,
    ) -> Result<JudgeVerdict, EvalError> {
        if response.is_empty() {
            return Err(EvalError::EmptyResponse);
        }
        Ok(JudgeVerdict {
            scores: ScoreVector::new(Self::score(&prompt.text, response))?,
            judge_id: self.id().to_string(),
        })
    }
}

/// Judges the optimized response of every result, filling `judged`.
/// Returns the judge ledger tapes in result order.
pub fn judge_results(
    judge: &dyn Judge,
    results: &mut [OptimizationResult],
) -> Result<Vec<CallTape>, EvalError> {
    let mut tapes = Vec::with_capacity(results.len());
    for result in results.iter_mut() {
        let mut tape = CallTape::new();
        let verdict = judge.judge(&result.original, &result.optimized_response, &mut tape)?;
        result.judged = Some(verdict.scores);
        tapes.push(tape);
    }
    Ok(tapes)
}

/// One line of a score table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub label: String,
    pub per_metric: [f64; 5],
    pub avg: f64,
}

impl TableRow {
    pub fn from_report(label: impl Into<String>, report: &EvalReport) -> Self {
        Self {
            label: label.into(),
            per_metric: report.per_metric.to_array(),
            avg: report.composite,
        }
    }
}

/// Aligned text table with columns Help, Corr, Coh, Comp, Verb and Avg,
/// values to four decimals.
pub fn render_table(rows: &[TableRow]) -> String {
    let width = rows
        .iter()
        .map(|r| r.label.chars().count())
        .max()
        .unwrap_or(0)
        .max("Method".len());
    let mut out = format!("{:<width$}", "Method");
    for m in Metric::ALL {
        out.push_str(&format!("  {:>6}", m.short()));
    }
    out.push_str(&format!("  {:>6}\n", "Avg"));
    for row in rows {
        out.push_str(&format!("{:<width$}", row.label));
        for v in row.per_metric.iter().chain([&row.avg]) {
            out.push_str(&format!("  {v:>6.4}"));
        }
        out.push('\n');
    }
    out
}
