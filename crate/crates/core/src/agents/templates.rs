//! Agent prompt templates.
//!
//! A template file has a system section and a payload section separated by a
//! line reading `<<<USER>>>`. Lines starting with `//` are comments. The
//! payload section holds `{{name}}` placeholders, each exactly once.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use super::AgentError;

pub const USER_SEPARATOR: &str = "<<<USER>>>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TemplateName {
    Explainer,
    Diagnostician,
    Synthesizer,
    Analyzer,
    Refiner,
    Combined,
    Responder,
    Direct,
    Cot,
    Role,
    Rag,
}

impl TemplateName {
    pub const ALL: [TemplateName; 11] = [
        TemplateName::Explainer,
        TemplateName::Diagnostician,
        TemplateName::Synthesizer,
        TemplateName::Analyzer,
        TemplateName::Refiner,
        TemplateName::Combined,
        TemplateName::Responder,
        TemplateName::Direct,
        TemplateName::Cot,
        TemplateName::Role,
        TemplateName::Rag,
    ];

    pub fn file_stem(self) -> &'static str {
        match self {
            TemplateName::Explainer => "explainer",
            TemplateName::Diagnostician => "diagnostician",
            TemplateName::Synthesizer => "synthesizer",
            TemplateName::Analyzer => "analyzer",
            TemplateName::Refiner => "refiner",
            TemplateName::Combined => "combined",
            TemplateName::Responder => "responder",
            TemplateName::Direct => "direct",
            TemplateName::Cot => "cot",
            TemplateName::Role => "role",
            TemplateName::Rag => "rag",
        }
    }

    /// Placeholders the pipeline binds for this template.
    pub fn placeholders(self) -> &'static [&'static str] {
        match self {
            TemplateName::Explainer => &["prompt", "response", "scores"],
            TemplateName::Diagnostician => &["prompt", "response", "scores", "card"],
            TemplateName::Synthesizer => &["prompt", "response", "scores", "card", "diagnosis"],
            TemplateName::Analyzer | TemplateName::Combined | TemplateName::Rag => {
                &["prompt", "exemplars"]
            }
            TemplateName::Refiner => &["prompt", "report"],
            TemplateName::Responder
            | TemplateName::Direct
            | TemplateName::Cot
            | TemplateName::Role => &["prompt"],
        }
    }

    /// Fixed opening of the system prompt for the five core agent roles.
    pub fn required_opening(self) -> Option<&'static str> {
        match self {
            TemplateName::Explainer => Some("You are an evaluation explainer"),
            TemplateName::Diagnostician => Some("You are a precise evaluation doctor for LLM outputs"),
            TemplateName::Synthesizer => Some("Mission: Based on the structured diagnosis"),
            TemplateName::Analyzer => Some("You are the Analyzer Agent"),
            TemplateName::Refiner => Some("You are the Refiner Agent"),
            TemplateName::Role => {
                Some("You are a meticulous assistant optimizing prompts for helpfulness, correctness, coherence, complexity, and verbosity.")
            }
            _ => None,
        }
    }

    fn builtin(self) -> &'static str {
        match self {
            TemplateName::Explainer => include_str!("../../templates/explainer.txt"),
            TemplateName::Diagnostician => include_str!("../../templates/diagnostician.txt"),
            TemplateName::Synthesizer => include_str!("../../templates/synthesizer.txt"),
            TemplateName::Analyzer => include_str!("../../templates/analyzer.txt"),
            TemplateName::Refiner => include_str!("../../templates/refiner.txt"),
            TemplateName::Combined => include_str!("../../templates/combined.txt"),
            TemplateName::Responder => include_str!("../../templates/responder.txt"),
            TemplateName::Direct => include_str!("../../templates/direct.txt"),
            TemplateName::Cot => include_str!("../../templates/cot.txt"),
            TemplateName::Role => include_str!("../../templates/role.txt"),
            TemplateName::Rag => include_str!("../../templates/rag.txt"),
        }
    }
}

impl fmt::Display for TemplateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.file_stem())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentTemplate {
    pub name: TemplateName,
    pub system_text: String,
    pub user_text: String,
    pub placeholders: BTreeSet<String>,
}

/// Names of all `{{name}}` occurrences, in order, duplicates included.
fn scan_placeholders(text: &str) -> Vec<String> {
    let mut found = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find("{{") {
        let after = &rest[start + 2..];
        match after.find("}}") {
            Some(end) => {
                found.push(after[..end].to_string());
                rest = &after[end + 2..];
            }
            None => break,
        }
    }
    found
}

impl AgentTemplate {
    /// Builds a template from its two sections. Placeholders are taken from
    /// the payload section.
    pub fn from_parts(name: TemplateName, system_text: &str, user_text: &str) -> Self {
        Self {
            name,
            system_text: system_text.to_string(),
            user_text: user_text.to_string(),
            placeholders: scan_placeholders(user_text).into_iter().collect(),
        }
    }

    pub fn parse(name: TemplateName, source: &str) -> Result<Self, AgentError> {
        let kept: Vec<&str> = source
            .lines()
            .filter(|l| !l.trim_start().starts_with("//"))
            .collect();
        let split = kept
            .iter()
            .position(|l| l.trim() == USER_SEPARATOR)
            .ok_or_else(|| AgentError::Template {
                name,
                reason: format!("missing {USER_SEPARATOR} separator"),
            })?;
        let system = kept[..split].join("\n");
        let user = kept[split + 1..].join("\n");
        let template = Self::from_parts(name, system.trim(), user.trim());
        template.check()?;
        Ok(template)
    }

    /// Placeholder and opening-line checks.
    pub fn check(&self) -> Result<(), AgentError> {
        let fail = |reason: String| AgentError::Template {
            name: self.name,
            reason,
        };
        if !scan_placeholders(&self.system_text).is_empty() {
            return Err(fail("system section must not contain placeholders".into()));
        }
        let occurrences = scan_placeholders(&self.user_text);
        let required: BTreeSet<String> = self
            .name
            .placeholders()
            .iter()
            .map(|s| s.to_string())
            .collect();
        if self.placeholders != required {
            return Err(fail(format!(
                "placeholders {:?}, expected {:?}",
                self.placeholders, required
            )));
        }
        for p in &required {
            let n = occurrences.iter().filter(|o| *o == p).count();
            if n != 1 {
                return Err(fail(format!("placeholder `{p}` appears {n} times")));
            }
        }
        if let Some(opening) = self.name.required_opening() {
            if !self.system_text.starts_with(opening) {
                return Err(fail(format!("system prompt must begin with `{opening}`")));
            }
        }
        Ok(())
    }

    /// Substitutes every placeholder in the payload section. Bound values
    /// are inserted verbatim and never re-scanned.
    pub fn render(&self, bindings: &BTreeMap<&str, String>) -> Result<String, AgentError> {
        render(&self.user_text, &self.placeholders, bindings)
    }
}

/// Substitutes `{{name}}` placeholders in `text`. Every placeholder must be
/// bound and every binding must name a placeholder.
pub fn render(
    text: &str,
    placeholders: &BTreeSet<String>,
    bindings: &BTreeMap<&str, String>,
) -> Result<String, AgentError> {
    if let Some(missing) = placeholders
        .iter()
        .find(|p| !bindings.contains_key(p.as_str()))
    {
        return Err(AgentError::MissingBinding(missing.clone()));
    }
    if let Some(extra) = bindings.keys().find(|k| !placeholders.contains(**k)) {
        return Err(AgentError::UnknownBinding(extra.to_string()));
    }
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        match after.find("}}") {
            Some(end) => {
                let name = &after[..end];
                match bindings.get(name) {
                    Some(value) => out.push_str(value),
                    None => {
                        out.push_str("{{");
                        out.push_str(name);
                        out.push_str("}}");
                    }
                }
                rest = &after[end + 2..];
            }
            None => {
                out.push_str(&rest[start..]);
                rest = "";
            }
        }
    }
    out.push_str(rest);
    Ok(out)
}

/// The full set of templates, built-in unless overridden from a directory.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    templates: BTreeMap<TemplateName, AgentTemplate>,
}

impl TemplateSet {
    pub fn builtin() -> Self {
        let templates = TemplateName::ALL
            .into_iter()
            .map(|name| {
                let t = AgentTemplate::parse(name, name.builtin())
                    .unwrap_or_else(|e| panic!("built-in template {name} is invalid: {e}"));
                (name, t)
            })
            .collect();
        Self { templates }
    }

    /// Built-in templates, with any `<dir>/<name>.txt` file taking precedence.
    pub fn load_dir(dir: &Path) -> Result<Self, AgentError> {
        let mut set = Self::builtin();
        for name in TemplateName::ALL {
            let path = dir.join(format!("{}.txt", name.file_stem()));
            if path.is_file() {
                let source = std::fs::read_to_string(&path).map_err(|e| AgentError::Template {
                    name,
                    reason: format!("{}: {e}", path.display()),
                })?;
                set.templates.insert(name, AgentTemplate::parse(name, &source)?);
            }
        }
        Ok(set)
    }

    pub fn get(&self, name: TemplateName) -> &AgentTemplate {
        &self.templates[&name]
    }

    /// Digest over every template's text, for run manifests.
    pub fn digest(&self) -> String {
        let mut parts: Vec<&[u8]> = Vec::new();
        for t in self.templates.values() {
            parts.push(t.system_text.as_bytes());
            parts.push(t.user_text.as_bytes());
        }
        crate::digest::sha256_parts(&parts)
    }
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::builtin()
    }
}
