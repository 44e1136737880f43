//! The agent roles. Each role is one rendered template and one gateway call.
//!
//! Training phase: explainer (reasoning card), diagnostician (diagnosis),
//! synthesizer (edit directives). Test phase: analyzer (improvement report)
//! and refiner (optimized prompt), or both merged into one call. The
//! single-pass baselines and the responder live here too.

pub mod templates;

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::gateway::{CallTape, Category, ChatRequest, Gateway, GatewayError};
use crate::model::{
    check_hit_ranks, Metric, ModelError, PromptRecord, RetrievalHit, ScoreVector, Strategy,
    TrainingInstance,
};

pub use templates::{render, AgentTemplate, TemplateName, TemplateSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Explainer,
    Diagnostician,
    Synthesizer,
    Analyzer,
    Refiner,
    Combined,
    Responder,
    Baseline(Strategy),
}

impl std::fmt::Display for Role {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Role::Explainer => f.write_str("explainer"),
            Role::Diagnostician => f.write_str("diagnostician"),
            Role::Synthesizer => f.write_str("synthesizer"),
            Role::Analyzer => f.write_str("analyzer"),
            Role::Refiner => f.write_str("refiner"),
            Role::Combined => f.write_str("combined"),
            Role::Responder => f.write_str("responder"),
            Role::Baseline(s) => write!(f, "baseline:{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error("template {name}: {reason}")]
    Template { name: TemplateName, reason: String },
    #[error("missing binding `{0}`")]
    MissingBinding(String),
    #[error("unknown binding `{0}`")]
    UnknownBinding(String),
    #[error("{role}: input `{input}` is empty")]
    AgentInputEmpty { role: Role, input: &'static str },
    #[error("{0}: empty output")]
    AgentOutputEmpty(Role),
    #[error("could not parse edit directives from synthesizer output")]
    UnparseableDirectives { raw: String },
    #[error("could not find ANALYSIS and OPTIMIZED_PROMPT sections in output")]
    UnparseableCombinedOutput { raw: String },
    #[error("retrieval returned no exemplars")]
    EmptyRetrieval,
    #[error("invalid retrieval hits: {0}")]
    InvalidHits(ModelError),
    #[error("{role}: {source}")]
    Gateway { role: Role, source: GatewayError },
}

/// Output caps per kind of agent output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenLimits {
    /// Cards, diagnoses, directives and reports.
    pub analysis: u32,
    /// Optimized prompts and responses.
    pub generation: u32,
}

impl Default for TokenLimits {
    fn default() -> Self {
        Self {
            analysis: 1024,
            generation: 2048,
        }
    }
}

/// Shortest decimal that round-trips, so `4.0` renders as `4`.
pub fn format_score(value: f64) -> String {
    format!("{value}")
}

/// One `metric: value` line per metric, in canonical order.
pub fn render_scores(scores: &ScoreVector) -> String {
    Metric::ALL
        .iter()
        .map(|m| format!("{}: {}", m.name(), format_score(scores.get(*m))))
        .collect::<Vec<_>>()
        .join("\n")
}

fn numbered(items: &[String]) -> String {
    items
        .iter()
        .enumerate()
        .map(|(i, d)| format!("{}. {}", i + 1, d))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Exemplar blocks for the analyzer and the combined agent, in rank order.
pub fn serialize_asset_exemplars(hits: &[RetrievalHit]) -> String {
    hits.iter()
        .map(|h| {
            format!(
                "### Exemplar {}\nPrompt:\n{}\n\nResponse:\n{}\n\nReasoning card:\n{}\n\nDiagnosis:\n{}\n\nEdit directives:\n{}",
                h.rank,
                h.instance.prompt.text,
                h.instance.response,
                h.assets.card,
                h.assets.diagnosis,
                numbered(&h.assets.directives),
            )
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Exemplar blocks for the retrieval baseline: prompt, response and scores,
/// without reasoning assets.
pub fn serialize_scored_exemplars(exemplars: &[&TrainingInstance]) -> String {
    exemplars
        .iter()
        .enumerate()
        .map(|(i, inst)| {
            format!(
                "### Exemplar {}\nPrompt:\n{}\n\nResponse:\n{}\n\nScores (0–4):\n{}",
                i + 1,
                inst.prompt.text,
                inst.response,
                render_scores(&inst.scores),
            )
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

fn is_enumeration_marker(line: &str) -> Option<&str> {
    let trimmed = line.trim_start();
    for bullet in ["-", "•", "*"] {
        if let Some(rest) = trimmed.strip_prefix(bullet) {
            if rest.is_empty() || rest.starts_with(char::is_whitespace) {
                return Some(rest.trim());
            }
        }
    }
    let digits = trimmed.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 {
        let rest = &trimmed[digits..];
        for close in [".", ")"] {
            if let Some(after) = rest.strip_prefix(close) {
                if after.is_empty() || after.starts_with(char::is_whitespace) {
                    return Some(after.trim());
                }
            }
        }
    }
    None
}

/// Splits synthesizer output into directives.
///
/// Lines starting with `1.`, `1)`, `-`, `•` or `*` open a new directive; any
/// other non-blank line continues the open one. Text before the first marker
/// is dropped. Output without any marker becomes a single directive.
pub fn parse_directives(text: &str) -> Result<Vec<String>, AgentError> {
    if text.trim().is_empty() {
        return Err(AgentError::AgentOutputEmpty(Role::Synthesizer));
    }
    let mut items: Vec<String> = Vec::new();
    let mut saw_marker = false;
    for line in text.lines() {
        if let Some(rest) = is_enumeration_marker(line) {
            saw_marker = true;
            items.push(rest.to_string());
        } else if saw_marker && !line.trim().is_empty() {
            let current = items.last_mut().expect("marker seen");
            if !current.is_empty() {
                current.push(' ');
            }
            current.push_str(line.trim());
        }
    }
    if !saw_marker {
        return Ok(vec![text.trim().to_string()]);
    }
    items.retain(|d| !d.is_empty());
    if items.is_empty() {
        return Err(AgentError::UnparseableDirectives {
            raw: text.to_string(),
        });
    }
    Ok(items)
}

/// Trims refiner output and drops a leading `Final optimized prompt:` label.
pub fn clean_refined_prompt(text: &str) -> String {
    const LABEL: &str = "final optimized prompt";
    let trimmed = text.trim();
    let (first, rest) = trimmed.split_once('\n').unwrap_or((trimmed, ""));
    let first = first.trim();
    let labelled = first
        .get(..LABEL.len())
        .is_some_and(|head| head.eq_ignore_ascii_case(LABEL));
    if labelled {
        let after = first[LABEL.len()..].trim_start();
        let inline = match after.strip_prefix(':') {
            Some(tail) => Some(tail.trim()),
            None if after.is_empty() => Some(""),
            None => None,
        };
        if let Some(inline) = inline {
            let body = match (inline.is_empty(), rest.is_empty()) {
                (true, _) => rest.to_string(),
                (false, true) => inline.to_string(),
                (false, false) => format!("{inline}\n{rest}"),
            };
            return body.trim().to_string();
        }
    }
    trimmed.to_string()
}

fn fenced_section<'a>(text: &'a str, label: &str) -> Option<&'a str> {
    let opener = format!("```{label}");
    let start = text.find(&opener)?;
    let after = &text[start + opener.len()..];
    let after = after.strip_prefix('\n').unwrap_or(after);
    let body = match after.find("```") {
        Some(end) => &after[..end],
        None => after,
    };
    Some(body.trim())
}

/// Extracts `(analysis, optimized prompt)` from fenced sections.
pub fn parse_combined_output(text: &str) -> Result<(String, String), AgentError> {
    let unparseable = || AgentError::UnparseableCombinedOutput {
        raw: text.to_string(),
    };
    let analysis = fenced_section(text, "ANALYSIS").ok_or_else(unparseable)?;
    let prompt = fenced_section(text, "OPTIMIZED_PROMPT").ok_or_else(unparseable)?;
    // The ANALYSIS body must not swallow the prompt section.
    if analysis.contains("```OPTIMIZED_PROMPT") || analysis.is_empty() || prompt.is_empty() {
        return Err(unparseable());
    }
    Ok((analysis.to_string(), clean_refined_prompt(prompt)))
}

fn optimized_record(original: &PromptRecord, text: String) -> Result<PromptRecord, ModelError> {
    let mut record = PromptRecord::single(format!("{}:optimized", original.id), text)?;
    record.derived_from = Some(original.id.clone());
    Ok(record)
}

/// Runs agent roles against one gateway.
#[derive(Debug, Clone)]
pub struct Agents {
    gateway: Gateway,
    templates: Arc<TemplateSet>,
    limits: TokenLimits,
    model_id: String,
    temperature: f64,
}

impl Agents {
    pub fn new(gateway: Gateway, templates: Arc<TemplateSet>) -> Self {
        Self {
            gateway,
            templates,
            limits: TokenLimits::default(),
            model_id: String::new(),
            temperature: 0.0,
        }
    }

    pub fn with_limits(mut self, limits: TokenLimits) -> Self {
        self.limits = limits;
        self
    }

    pub fn with_model(mut self, model_id: impl Into<String>) -> Self {
        self.model_id = model_id.into();
        self
    }

    /// Overrides the default decoding temperature of 0.
    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }

    pub fn provider_id(&self) -> &str {
        self.gateway.provider_id()
    }

    pub fn templates(&self) -> &TemplateSet {
        &self.templates
    }

    /// Renders `name` with `bindings`, returning `(system, user)`.
    pub fn build_request(
        &self,
        name: TemplateName,
        bindings: BTreeMap<&str, String>,
        max_tokens: u32,
    ) -> Result<ChatRequest, AgentError> {
        let template = self.templates.get(name);
        let user = template.render(&bindings)?;
        let mut request = ChatRequest::new(template.system_text.clone(), user)
            .with_max_output_tokens(max_tokens)
            .with_model(self.model_id.clone());
        request.temperature = self.temperature;
        Ok(request)
    }

    fn call(
        &self,
        role: Role,
        category: Category,
        request: ChatRequest,
        tape: &mut CallTape,
    ) -> Result<String, AgentError> {
        match self.gateway.complete(&request, category, tape) {
            Ok(resp) => Ok(resp.text),
            Err(GatewayError::EmptyCompletion) => Err(AgentError::AgentOutputEmpty(role)),
            Err(source) => Err(AgentError::Gateway { role, source }),
        }
    }

    fn instance_bindings(instance: &TrainingInstance) -> BTreeMap<&'static str, String> {
        BTreeMap::from([
            ("prompt", instance.prompt.text.clone()),
            ("response", instance.response.clone()),
            ("scores", render_scores(&instance.scores)),
        ])
    }

    /// Reasoning card explaining why the instance got its scores.
    pub fn explain_metrics(
        &self,
        instance: &TrainingInstance,
        tape: &mut CallTape,
    ) -> Result<String, AgentError> {
        let request = self.build_request(
            TemplateName::Explainer,
            Self::instance_bindings(instance),
            self.limits.analysis,
        )?;
        let card = self.call(Role::Explainer, Category::AssetBuilder, request, tape)?;
        Ok(card.trim().to_string())
    }

    /// Diagnosis of weaknesses and metric trade-offs, grounded in the card.
    pub fn diagnose(
        &self,
        instance: &TrainingInstance,
        card: &str,
        tape: &mut CallTape,
    ) -> Result<String, AgentError> {
        if card.trim().is_empty() {
            return Err(AgentError::AgentInputEmpty {
                role: Role::Diagnostician,
                input: "card",
            });
        }
        let mut bindings = Self::instance_bindings(instance);
        bindings.insert("card", card.to_string());
        let request =
            self.build_request(TemplateName::Diagnostician, bindings, self.limits.analysis)?;
        let diagnosis = self.call(Role::Diagnostician, Category::AssetBuilder, request, tape)?;
        Ok(diagnosis.trim().to_string())
    }

    /// Edit directives derived from the card and diagnosis.
    pub fn synthesize_actions(
        &self,
        instance: &TrainingInstance,
        card: &str,
        diagnosis: &str,
        tape: &mut CallTape,
    ) -> Result<Vec<String>, AgentError> {
        for (input, value) in [("card", card), ("diagnosis", diagnosis)] {
            if value.trim().is_empty() {
                return Err(AgentError::AgentInputEmpty {
                    role: Role::Synthesizer,
                    input,
                });
            }
        }
        let mut bindings = Self::instance_bindings(instance);
        bindings.insert("card", card.to_string());
        bindings.insert("diagnosis", diagnosis.to_string());
        let request =
            self.build_request(TemplateName::Synthesizer, bindings, self.limits.analysis)?;
        let raw = self.call(Role::Synthesizer, Category::AssetBuilder, request, tape)?;
        parse_directives(&raw)
    }

    fn check_hits(hits: &[RetrievalHit]) -> Result<(), AgentError> {
        if hits.is_empty() {
            return Err(AgentError::EmptyRetrieval);
        }
        check_hit_ranks(hits).map_err(AgentError::InvalidHits)
    }

    /// Improvement report contrasting the prompt with retrieved exemplars.
    pub fn analyze(
        &self,
        test_prompt: &PromptRecord,
        hits: &[RetrievalHit],
        tape: &mut CallTape,
    ) -> Result<String, AgentError> {
        Self::check_hits(hits)?;
        let bindings = BTreeMap::from([
            ("prompt", test_prompt.text.clone()),
            ("exemplars", serialize_asset_exemplars(hits)),
        ]);
        let request = self.build_request(TemplateName::Analyzer, bindings, self.limits.analysis)?;
        let report = self.call(Role::Analyzer, Category::Optimizer, request, tape)?;
        Ok(report.trim().to_string())
    }

    /// Optimized prompt conditioned on the analyzer report.
    pub fn refine(
        &self,
        test_prompt: &PromptRecord,
        report: &str,
        tape: &mut CallTape,
    ) -> Result<PromptRecord, AgentError> {
        if report.trim().is_empty() {
            return Err(AgentError::AgentInputEmpty {
                role: Role::Refiner,
                input: "report",
            });
        }
        let bindings = BTreeMap::from([
            ("prompt", test_prompt.text.clone()),
            ("report", report.to_string()),
        ]);
        let request = self.build_request(TemplateName::Refiner, bindings, self.limits.generation)?;
        let raw = self.call(Role::Refiner, Category::Optimizer, request, tape)?;
        let text = clean_refined_prompt(&raw);
        if text.is_empty() {
            return Err(AgentError::AgentOutputEmpty(Role::Refiner));
        }
        optimized_record(test_prompt, text).map_err(|_| AgentError::AgentOutputEmpty(Role::Refiner))
    }

    /// Analyzer and refiner merged into one call.
    pub fn analyze_and_refine_combined(
        &self,
        test_prompt: &PromptRecord,
        hits: &[RetrievalHit],
        tape: &mut CallTape,
    ) -> Result<(String, PromptRecord), AgentError> {
        Self::check_hits(hits)?;
        let bindings = BTreeMap::from([
            ("prompt", test_prompt.text.clone()),
            ("exemplars", serialize_asset_exemplars(hits)),
        ]);
        let request = self.build_request(TemplateName::Combined, bindings, self.limits.generation)?;
        let raw = self.call(Role::Combined, Category::Optimizer, request, tape)?;
        let (report, prompt) = parse_combined_output(&raw)?;
        let record = optimized_record(test_prompt, prompt)
            .map_err(|_| AgentError::UnparseableCombinedOutput { raw: raw.clone() })?;
        Ok((report, record))
    }

    /// One-pass rewrite for the `direct`, `cot`, `role` and `rag` baselines.
    /// Returns `(reasoning, optimized prompt)`; reasoning is empty except for
    /// `cot`. `exemplars` is used only by `rag`.
    pub fn rewrite_single_pass(
        &self,
        strategy: Strategy,
        test_prompt: &PromptRecord,
        exemplars: &[&TrainingInstance],
        tape: &mut CallTape,
    ) -> Result<(String, PromptRecord), AgentError> {
        let role = Role::Baseline(strategy);
        let name = match strategy {
            Strategy::Direct => TemplateName::Direct,
            Strategy::Cot => TemplateName::Cot,
            Strategy::Role => TemplateName::Role,
            Strategy::Rag => TemplateName::Rag,
            Strategy::MaSapo | Strategy::MaSapoCombined => {
                panic!("{strategy} is not a single-pass strategy")
            }
        };
        let mut bindings = BTreeMap::from([("prompt", test_prompt.text.clone())]);
        if strategy == Strategy::Rag {
            bindings.insert("exemplars", serialize_scored_exemplars(exemplars));
        }
        let request = self.build_request(name, bindings, self.limits.generation)?;
        let raw = self.call(role, Category::Optimizer, request, tape)?;
        let (reasoning, text) = if strategy == Strategy::Cot {
            parse_combined_output(&raw).unwrap_or_else(|_| (String::new(), clean_refined_prompt(&raw)))
        } else {
            (String::new(), clean_refined_prompt(&raw))
        };
        if text.is_empty() {
            return Err(AgentError::AgentOutputEmpty(role));
        }
        let record =
            optimized_record(test_prompt, text).map_err(|_| AgentError::AgentOutputEmpty(role))?;
        Ok((reasoning, record))
    }

    /// Generates the response to a prompt.
    pub fn respond(&self, prompt: &PromptRecord, tape: &mut CallTape) -> Result<String, AgentError> {
        let bindings = BTreeMap::from([("prompt", prompt.text.clone())]);
        let request = self.build_request(TemplateName::Responder, bindings, self.limits.generation)?;
        let text = self.call(Role::Responder, Category::Responder, request, tape)?;
        Ok(text.trim().to_string())
    }
}
