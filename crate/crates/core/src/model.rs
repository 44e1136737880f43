//! Shared domain types: prompts, score vectors, training instances, reasoning
//! assets, retrieval hits and optimization results.
//!
//! Everything here is plain data. Constructors validate; deserialized values
//! are re-checked with the `validate` methods before use.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lowest and highest raw score on the annotation scale.
pub const SCORE_MIN: f64 = 0.0;
pub const SCORE_MAX: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("score out of range: {metric} = {value} (expected 0..=4)")]
    ScoreOutOfRange { metric: Metric, value: f64 },
    #[error("empty text in `{0}`")]
    EmptyText(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
}

/// The five annotated quality dimensions, in their canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Helpfulness,
    Correctness,
    Coherence,
    Complexity,
    Verbosity,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Helpfulness,
        Metric::Correctness,
        Metric::Coherence,
        Metric::Complexity,
        Metric::Verbosity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Helpfulness => "helpfulness",
            Metric::Correctness => "correctness",
            Metric::Coherence => "coherence",
            Metric::Complexity => "complexity",
            Metric::Verbosity => "verbosity",
        }
    }

    /// Column label used in report tables.
    pub fn short(self) -> &'static str {
        match self {
            Metric::Helpfulness => "Help",
            Metric::Correctness => "Corr",
            Metric::Coherence => "Coh",
            Metric::Complexity => "Comp",
            Metric::Verbosity => "Verb",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Raw scores on the 0–4 scale. Field order is the serialization order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub helpfulness: f64,
    pub correctness: f64,
    pub coherence: f64,
    pub complexity: f64,
    pub verbosity: f64,
}

impl ScoreVector {
    /// Builds a vector from raw values in `Metric::ALL` order.
    pub fn new(values: [f64; 5]) -> Result<Self, ModelError> {
        let v = Self {
            helpfulness: values[0],
            correctness: values[1],
            coherence: values[2],
            complexity: values[3],
            verbosity: values[4],
        };
        v.validate()?;
        Ok(v)
    }

    /// Builds a vector from values already normalized to [0, 1].
    pub fn from_normalized(values: [f64; 5]) -> Result<Self, ModelError> {
        Self::new(values.map(|v| v * SCORE_MAX))
    }

    pub fn uniform(value: f64) -> Result<Self, ModelError> {
        Self::new([value; 5])
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Helpfulness => self.helpfulness,
            Metric::Correctness => self.correctness,
            Metric::Coherence => self.coherence,
            Metric::Complexity => self.complexity,
            Metric::Verbosity => self.verbosity,
        }
    }

    pub fn to_array(&self) -> [f64; 5] {
        Metric::ALL.map(|m| self.get(m))
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for metric in Metric::ALL {
            let value = self.get(metric);
            // NaN fails both comparisons.
            if !(SCORE_MIN..=SCORE_MAX).contains(&value) {
                return Err(ModelError::ScoreOutOfRange { metric, value });
            }
        }
        Ok(())
    }
}

/// One speaker turn of a prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub role: String,
    pub text: String,
}

impl Turn {
    pub fn new(role: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            role: role.into(),
            text: text.into(),
        }
    }
}

/// Canonical flattening of prompt turns.
///
/// A single turn flattens to its text unchanged. Multiple turns become
/// `ROLE: text` blocks separated by a blank line, with the role upper-cased.
pub fn flatten_turns(turns: &[Turn]) -> String {
    match turns {
        [] => String::new(),
        [only] => only.text.clone(),
        many => many
            .iter()
            .map(|t| format!("{}: {}", t.role.to_uppercase(), t.text))
            .collect::<Vec<_>>()
            .join("\n\n"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub id: String,
    pub text: String,
    pub turns: Vec<Turn>,
    /// Id of the prompt this one was rewritten from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derived_from: Option<String>,
}

impl PromptRecord {
    /// A single-turn user prompt.
    pub fn single(id: impl Into<String>, text: impl Into<String>) -> Result<Self, ModelError> {
        Self::from_turns(id, vec![Turn::new("user", text)])
    }

    pub fn from_turns(id: impl Into<String>, turns: Vec<Turn>) -> Result<Self, ModelError> {
        let record = Self {
            id: id.into(),
            text: flatten_turns(&turns),
            turns,
            derived_from: None,
        };
        record.validate()?;
        Ok(record)
    }

    /// Text of the final turn.
    pub fn last_turn(&self) -> &str {
        self.turns.last().map(|t| t.text.as_str()).unwrap_or("")
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.turns.is_empty() {
            return Err(ModelError::Invariant(format!(
                "prompt `{}` has no turns",
                self.id
            )));
        }
        if self.text.trim().is_empty() {
            return Err(ModelError::EmptyText("prompt".into()));
        }
        if self.text != flatten_turns(&self.turns) {
            return Err(ModelError::Invariant(format!(
                "prompt `{}` text does not match its turns",
                self.id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingInstance {
    pub prompt: PromptRecord,
    pub response: String,
    pub scores: ScoreVector,
}

impl TrainingInstance {
    pub fn id(&self) -> &str {
        &self.prompt.id
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.prompt.validate()?;
        if self.response.trim().is_empty() {
            return Err(ModelError::EmptyText("response".into()));
        }
        self.scores.validate()
    }
}

/// Unvalidated ingestion row. Every field may be missing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawInstance {
    pub id: Option<String>,
    pub prompt: Option<String>,
    pub turns: Option<Vec<Turn>>,
    pub response: Option<String>,
    /// Raw scores in `Metric::ALL` order.
    pub scores: [Option<f64>; 5],
}

/// Checks a raw row and turns it into a [`TrainingInstance`].
///
/// `fallback_id` is used when the row carries no id of its own.
pub fn validate_training_instance(
    raw: RawInstance,
    fallback_id: &str,
) -> Result<TrainingInstance, ModelError> {
    let id = raw.id.unwrap_or_else(|| fallback_id.to_string());
    let turns = match (raw.turns, raw.prompt) {
        (Some(turns), _) if !turns.is_empty() => turns,
        (_, Some(text)) => vec![Turn::new("user", text)],
        _ => return Err(ModelError::MissingField("prompt".into())),
    };
    let response = raw
        .response
        .ok_or_else(|| ModelError::MissingField("response".into()))?;
    let mut values = [0.0; 5];
    for (slot, (metric, value)) in values
        .iter_mut()
        .zip(Metric::ALL.iter().zip(raw.scores))
    {
        *slot = value.ok_or_else(|| ModelError::MissingField(metric.name().into()))?;
    }
    if turns.iter().all(|t| t.text.trim().is_empty()) {
        return Err(ModelError::EmptyText("prompt".into()));
    }
    let prompt = PromptRecord::from_turns(id, turns)?;
    if response.trim().is_empty() {
        return Err(ModelError::EmptyText("response".into()));
    }
    let scores = ScoreVector::new(values)?;
    Ok(TrainingInstance {
        prompt,
        response,
        scores,
    })
}

/// The stored triple attached to one training instance: a reasoning card,
/// a diagnosis, and an ordered list of edit directives.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasoningAssets {
    pub source_id: String,
    pub card: String,
    pub diagnosis: String,
    pub directives: Vec<String>,
}

impl ReasoningAssets {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.card.trim().is_empty() {
            return Err(ModelError::EmptyText("card".into()));
        }
        if self.diagnosis.trim().is_empty() {
            return Err(ModelError::EmptyText("diagnosis".into()));
        }
        if self.directives.is_empty() {
            return Err(ModelError::Invariant("no directives".into()));
        }
        if self.directives.iter().any(|d| d.trim().is_empty()) {
            return Err(ModelError::EmptyText("directive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalHit {
    pub instance: TrainingInstance,
    pub assets: ReasoningAssets,
    pub score: f64,
    /// 1-based position in the result list.
    pub rank: usize,
}

/// Checks that hits are ranked 1..n with non-increasing scores.
pub fn check_hit_ranks(hits: &[RetrievalHit]) -> Result<(), ModelError> {
    for (i, hit) in hits.iter().enumerate() {
        if hit.rank != i + 1 {
            return Err(ModelError::Invariant(format!(
                "hit at position {} has rank {}",
                i + 1,
                hit.rank
            )));
        }
        if i > 0 && hit.score > hits[i - 1].score {
            return Err(ModelError::Invariant(format!(
                "hit ranks are not sorted by score at rank {}",
                hit.rank
            )));
        }
    }
    Ok(())
}

/// Token and call counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UsageStats {
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub calls: u64,
}

impl UsageStats {
    pub fn new(input_tokens: u64, output_tokens: u64, calls: u64) -> Self {
        Self {
            input_tokens,
            output_tokens,
            calls,
        }
    }

    pub fn one_call(input_tokens: u64, output_tokens: u64) -> Self {
        Self::new(input_tokens, output_tokens, 1)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.calls == 0 && (self.input_tokens != 0 || self.output_tokens != 0) {
            return Err(ModelError::Invariant(
                "token usage recorded without any call".into(),
            ));
        }
        Ok(())
    }
}

impl Add for UsageStats {
    type Output = UsageStats;

    fn add(self, rhs: UsageStats) -> UsageStats {
        UsageStats {
            input_tokens: self.input_tokens + rhs.input_tokens,
            output_tokens: self.output_tokens + rhs.output_tokens,
            calls: self.calls + rhs.calls,
        }
    }
}

impl AddAssign for UsageStats {
    fn add_assign(&mut self, rhs: UsageStats) {
        *self = *self + rhs;
    }
}

impl Sum for UsageStats {
    fn sum<I: Iterator<Item = UsageStats>>(iter: I) -> Self {
        iter.fold(UsageStats::default(), Add::add)
    }
}

impl<'a> Sum<&'a UsageStats> for UsageStats {
    fn sum<I: Iterator<Item = &'a UsageStats>>(iter: I) -> Self {
        iter.copied().sum()
    }
}

/// How an optimized prompt was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    /// Retrieval, then separate analyzer and refiner calls.
    #[serde(rename = "ma-sapo")]
    MaSapo,
    /// Retrieval, then one merged analyzer/refiner call.
    #[serde(rename = "ma-sapo-combined")]
    MaSapoCombined,
    #[serde(rename = "direct")]
    Direct,
    #[serde(rename = "cot")]
    Cot,
    #[serde(rename = "role")]
    Role,
    #[serde(rename = "rag")]
    Rag,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::MaSapo,
        Strategy::MaSapoCombined,
        Strategy::Direct,
        Strategy::Cot,
        Strategy::Role,
        Strategy::Rag,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::MaSapo => "ma-sapo",
            Strategy::MaSapoCombined => "ma-sapo-combined",
            Strategy::Direct => "direct",
            Strategy::Cot => "cot",
            Strategy::Role => "role",
            Strategy::Rag => "rag",
        }
    }

    pub fn uses_retrieval(self) -> bool {
        matches!(
            self,
            Strategy::MaSapo | Strategy::MaSapoCombined | Strategy::Rag
        )
    }

    /// Optimizer-side calls issued per successfully processed prompt.
    pub fn optimizer_calls(self) -> u64 {
        match self {
            Strategy::MaSapo => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| format!("unknown strategy `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub original: PromptRecord,
    pub report: String,
    pub optimized_prompt: PromptRecord,
    pub optimized_response: String,
    /// Optimizer-side usage for this prompt.
    pub usage: UsageStats,
    pub judged: Option<ScoreVector>,
    pub strategy: Strategy,
    pub k_used: usize,
    /// Set when retrieval found nothing and the prompt fell back to `direct`.
    #[serde(default)]
    pub retrieval_empty: bool,
}

impl OptimizationResult {
    pub fn validate(&self) -> Result<(), ModelError> {
        self.original.validate()?;
        self.optimized_prompt.validate()?;
        self.usage.validate()?;
        if let Some(judged) = &self.judged {
            judged.validate()?;
        }
        match self.strategy {
            Strategy::MaSapo if self.report.trim().is_empty() || self.k_used == 0 => {
                Err(ModelError::Invariant(
                    "ma-sapo result needs a report and at least one hit".into(),
                ))
            }
            Strategy::Direct | Strategy::Cot | Strategy::Role if self.k_used != 0 => Err(
                ModelError::Invariant(format!("{} result cannot use retrieval", self.strategy)),
            ),
            _ => Ok(()),
        }
    }
}
