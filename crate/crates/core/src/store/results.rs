//! Line-delimited result and prompt files.

use std::path::Path;

use serde_json::Value;

use super::ingest::split_turns;
use super::{atomic_write, StoreError};
use crate::model::{OptimizationResult, PromptRecord};

fn read_text(path: &Path) -> Result<String, StoreError> {
    std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => StoreError::FileNotFound(path.display().to_string()),
        _ => StoreError::Io(e),
    })
}

fn format_error(line: usize, cause: impl ToString) -> StoreError {
    StoreError::FormatError {
        location: format!("line {line}"),
        cause: cause.to_string(),
    }
}

/// One JSON object per result, in order.
pub fn encode_results(results: &[OptimizationResult]) -> String {
    let mut out = String::new();
    for r in results {
        out.push_str(&serde_json::to_string(r).expect("result serializes"));
        out.push('\n');
    }
    out
}

pub fn decode_results(text: &str) -> Result<Vec<OptimizationResult>, StoreError> {
    let mut results = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: OptimizationResult = serde_json::from_str(line).map_err(|e| format_error(i + 1, e))?;
        r.validate().map_err(|e| format_error(i + 1, e))?;
        results.push(r);
    }
    Ok(results)
}

pub fn write_results(path: &Path, results: &[OptimizationResult]) -> Result<(), StoreError> {
    atomic_write(path, encode_results(results).as_bytes())?;
    Ok(())
}

pub fn read_results(path: &Path) -> Result<Vec<OptimizationResult>, StoreError> {
    decode_results(&read_text(path)?)
}

/// Test prompts: one JSON object per line with a `prompt` string and an
/// optional `id`. Any other fields are ignored, so a HelpSteer file works.
pub fn decode_prompts(text: &str) -> Result<Vec<PromptRecord>, StoreError> {
    let mut prompts = Vec::new();
    for (i, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
        let value: Value = serde_json::from_str(line).map_err(|e| format_error(i + 1, e))?;
        let prompt = value
            .get("prompt")
            .and_then(Value::as_str)
            .ok_or_else(|| format_error(i + 1, "missing `prompt` string"))?;
        let id = match value.get("id") {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => i.to_string(),
        };
        let record = PromptRecord::from_turns(id, split_turns(prompt))
            .map_err(|e| format_error(i + 1, e))?;
        prompts.push(record);
    }
    Ok(prompts)
}

pub fn read_prompts(path: &Path) -> Result<Vec<PromptRecord>, StoreError> {
    decode_prompts(&read_text(path)?)
}
