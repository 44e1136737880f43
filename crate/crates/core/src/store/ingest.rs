//! Ingestion of HelpSteer-style datasets (JSONL or CSV).
//!
//! Recognized columns: `prompt`, `response`, `helpfulness`, `correctness`,
//! `coherence`, `complexity`, `verbosity`, plus an optional `id`. Other
//! columns are ignored. Rows that fail validation are collected as rejects.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use super::corpus::CorpusRecord;
use super::StoreError;
use crate::model::{validate_training_instance, Metric, ModelError, RawInstance, Turn};

const KNOWN_FIELDS: [&str; 8] = [
    "id",
    "prompt",
    "response",
    "helpfulness",
    "correctness",
    "coherence",
    "complexity",
    "verbosity",
];

/// Turn separator used by multi-turn HelpSteer2 prompts.
const TURN_MARKER: &str = "<extra_id_1>";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    HelpsteerJsonl,
    HelpsteerCsv,
}

impl std::str::FromStr for DatasetFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "helpsteer-jsonl" => Ok(DatasetFormat::HelpsteerJsonl),
            "helpsteer-csv" => Ok(DatasetFormat::HelpsteerCsv),
            other => Err(format!(
                "unknown format `{other}` (expected helpsteer-jsonl or helpsteer-csv)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reject {
    /// 0-based data row.
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub records: Vec<CorpusRecord>,
    pub rejects: Vec<Reject>,
    pub ignored_fields: BTreeSet<String>,
    pub warnings: Vec<String>,
}

impl IngestReport {
    pub fn count(&self) -> usize {
        self.records.len()
    }

    /// Rejected rows over all rows seen; 0 when no rows were seen.
    pub fn reject_rate(&self) -> f64 {
        let total = self.records.len() + self.rejects.len();
        if total == 0 {
            0.0
        } else {
            self.rejects.len() as f64 / total as f64
        }
    }
}

/// Splits a HelpSteer2 prompt into turns. Prompts without the marker are a
/// single user turn.
pub fn split_turns(prompt: &str) -> Vec<Turn> {
    if !prompt.contains(TURN_MARKER) {
        return vec![Turn::new("user", prompt)];
    }
    let mut parts = prompt.split(TURN_MARKER);
    let mut turns = vec![Turn::new("user", parts.next().unwrap_or_default().trim())];
    for part in parts {
        let (role, text) = part.split_once('\n').unwrap_or((part, ""));
        turns.push(Turn::new(role.trim().to_lowercase(), text.trim()));
    }
    turns
}

fn json_text(map: &Map<String, Value>, key: &str) -> Option<String> {
    match map.get(key)? {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn json_score(map: &Map<String, Value>, metric: Metric) -> Result<Option<f64>, String> {
    match map.get(metric.name()) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Number(n)) => Ok(n.as_f64()),
        Some(Value::String(s)) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| format!("{metric} is not a number: `{s}`")),
        Some(other) => Err(format!("{metric} is not a number: {other}")),
    }
}

fn raw_from_fields(
    prompt: Option<String>,
    response: Option<String>,
    id: Option<String>,
    scores: [Option<f64>; 5],
) -> RawInstance {
    RawInstance {
        id: id.filter(|s| !s.trim().is_empty()),
        turns: prompt.as_deref().map(split_turns),
        prompt,
        response,
        scores,
    }
}

fn reason(err: ModelError) -> String {
    match &err {
        ModelError::ScoreOutOfRange { .. } => format!("ScoreOutOfRange: {err}"),
        ModelError::MissingField(_) => format!("MissingField: {err}"),
        ModelError::EmptyText(_) => format!("EmptyText: {err}"),
        ModelError::Invariant(_) => format!("Invalid: {err}"),
    }
}

struct Collector {
    report: IngestReport,
    seen_ids: HashSet<String>,
}

impl Collector {
    fn new() -> Self {
        Self {
            report: IngestReport::default(),
            seen_ids: HashSet::new(),
        }
    }

    fn push(&mut self, row: usize, raw: Result<RawInstance, String>) {
        let outcome = raw.and_then(|raw| {
            validate_training_instance(raw, &row.to_string()).map_err(reason)
        });
        match outcome {
            Ok(instance) if !self.seen_ids.insert(instance.id().to_string()) => {
                self.report.rejects.push(Reject {
                    row,
                    reason: format!("DuplicateId: `{}`", instance.id()),
                });
            }
            Ok(instance) => self.report.records.push(CorpusRecord::new(instance)),
            Err(reason) => self.report.rejects.push(Reject { row, reason }),
        }
    }

    fn note_fields<'a>(&mut self, fields: impl Iterator<Item = &'a str>) {
        for f in fields {
            if !KNOWN_FIELDS.contains(&f) {
                self.report.ignored_fields.insert(f.to_string());
            }
        }
    }

    fn finish(mut self) -> IngestReport {
        if !self.report.ignored_fields.is_empty() {
            let list: Vec<_> = self.report.ignored_fields.iter().cloned().collect();
            log::info!("ignoring extra fields: {}", list.join(", "));
        }
        if self.report.records.is_empty() && self.report.rejects.is_empty() {
            self.report.warnings.push("dataset contains no rows".into());
            log::warn!("dataset contains no rows");
        }
        self.report
    }
}

fn parse_jsonl(text: &str) -> IngestReport {
    let mut c = Collector::new();
    let rows = text.lines().filter(|l| !l.trim().is_empty());
    for (row, line) in rows.enumerate() {
        let raw = match serde_json::from_str::<Value>(line) {
            Ok(Value::Object(map)) => {
                c.note_fields(map.keys().map(String::as_str));
                let mut scores = [None; 5];
                let mut bad = None;
                for (slot, metric) in scores.iter_mut().zip(Metric::ALL) {
                    match json_score(&map, metric) {
                        Ok(v) => *slot = v,
                        Err(e) => bad = bad.or(Some(e)),
                    }
                }
                match bad {
                    Some(e) => Err(format!("FormatError: {e}")),
                    None => Ok(raw_from_fields(
                        json_text(&map, "prompt"),
                        json_text(&map, "response"),
                        json_text(&map, "id"),
                        scores,
                    )),
                }
            }
            Ok(_) => Err("FormatError: row is not a JSON object".to_string()),
            Err(e) => Err(format!("FormatError: {e}")),
        };
        c.push(row, raw);
    }
    c.finish()
}

fn parse_csv(text: &str) -> Result<IngestReport, StoreError> {
    let mut c = Collector::new();
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = match reader.headers() {
        Ok(h) => h.clone(),
        Err(e) => {
            return Err(StoreError::FormatError {
                location: "row 0 (header)".into(),
                cause: e.to_string(),
            })
        }
    };
    c.note_fields(headers.iter());
    let column = |name: &str| headers.iter().position(|h| h == name);
    let cols = (column("prompt"), column("response"), column("id"));
    let score_cols = Metric::ALL.map(|m| column(m.name()));
    for (row, result) in reader.records().enumerate() {
        let raw = match result {
            Ok(rec) => {
                let text = |i: Option<usize>| i.and_then(|i| rec.get(i)).map(str::to_string);
                let mut scores = [None; 5];
                let mut bad = None;
                for ((slot, col), metric) in scores.iter_mut().zip(score_cols).zip(Metric::ALL) {
                    match text(col).filter(|s| !s.trim().is_empty()) {
                        None => {}
                        Some(s) => match s.trim().parse::<f64>() {
                            Ok(v) => *slot = Some(v),
                            Err(_) => {
                                bad = bad.or(Some(format!("{metric} is not a number: `{s}`")))
                            }
                        },
                    }
                }
                match bad {
                    Some(e) => Err(format!("FormatError: {e}")),
                    None => Ok(raw_from_fields(text(cols.0), text(cols.1), text(cols.2), scores)),
                }
            }
            Err(e) => Err(format!("FormatError: {e}")),
        };
        c.push(row, raw);
    }
    Ok(c.finish())
}

/// Parses dataset text already in memory.
pub fn parse_dataset(text: &str, format: DatasetFormat) -> Result<IngestReport, StoreError> {
    match format {
        DatasetFormat::HelpsteerJsonl => Ok(parse_jsonl(text)),
        DatasetFormat::HelpsteerCsv => {
            if text.trim().is_empty() {
                return Ok(Collector::new().finish());
            }
            parse_csv(text)
        }
    }
}

pub fn ingest_dataset(path: &Path, format: DatasetFormat) -> Result<IngestReport, StoreError> {
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => StoreError::FileNotFound(path.display().to_string()),
        _ => StoreError::Io(e),
    })?;
    let text = String::from_utf8(bytes).map_err(|e| {
        let line = 1 + e.as_bytes()[..e.utf8_error().valid_up_to()]
            .iter()
            .filter(|&&b| b == b'\n')
            .count();
        StoreError::FormatError {
            location: format!("line {line}"),
            cause: "invalid UTF-8".into(),
        }
    })?;
    parse_dataset(&text, format)
}
