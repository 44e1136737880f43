//! Browser bindings: BM25 exploration, the composite score, and a mock
//! optimization walk-through. Every export returns JSON text.

use std::collections::BTreeMap;
use std::sync::Arc;

use assetopt::agents::{Agents, TemplateSet};
use assetopt::evaluation::{composite_score, normalize_score, Judge, MockJudge};
use assetopt::gateway::{Category, CallTape, Gateway, Ledger, MockProvider, RetryPolicy};
use assetopt::model::{Metric, PromptRecord, ScoreVector};
use assetopt::pipeline::{retrieve, run_test_phase, run_training_phase, Backends, PipelineConfig};
use assetopt::retrieval::{tokenize, Bm25Params, Index};
use assetopt::store::{parse_dataset, Corpus, DatasetFormat};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Ranks the non-empty lines of `docs` against `query`.
pub fn explore(docs: &str, query: &str, k: usize, k1: f64, b: f64) -> Result<Value, String> {
    if !(k1 >= 0.0 && (0.0..=1.0).contains(&b)) {
        return Err("k1 must be non-negative and b must lie in [0, 1]".into());
    }
    let lines: Vec<(String, &str)> = docs
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .enumerate()
        .map(|(i, l)| (format!("d{i}"), l))
        .collect();
    let index = Index::build(lines.iter().map(|(id, text)| (id.as_str(), *text)))
        .map_err(|e| e.to_string())?;
    let hits: Vec<Value> = index
        .top_k(query, k, Bm25Params { k1, b })
        .into_iter()
        .enumerate()
        .map(|(rank, s)| {
            json!({
                "rank": rank + 1,
                "id": s.id,
                "score": s.score,
                "text": lines[s.ordinal].1,
            })
        })
        .collect();
    Ok(json!({
        "query_terms": tokenize(query),
        "doc_count": index.doc_count(),
        "avg_doc_length": index.avg_doc_length(),
        "hits": hits,
    }))
}

/// Normalized metrics and composite for five raw 0–4 scores.
pub fn score(raw: [f64; 5]) -> Result<Value, String> {
    let scores = ScoreVector::new(raw).map_err(|e| e.to_string())?;
    let mut normalized = BTreeMap::new();
    for m in Metric::ALL {
        normalized.insert(m.short(), normalize_score(scores.get(m)).map_err(|e| e.to_string())?);
    }
    Ok(json!({ "normalized": normalized, "composite": composite_score(&scores) }))
}

/// Builds assets for a small HelpSteer JSONL corpus with the mock provider,
/// then optimizes one prompt, reporting every intermediate step.
pub fn walkthrough(train_jsonl: &str, prompt: &str, k: usize, seed: u64) -> Result<Value, String> {
    let ingest = parse_dataset(train_jsonl, DatasetFormat::HelpsteerJsonl).map_err(|e| e.to_string())?;
    let rejects: Vec<Value> = ingest
        .rejects
        .iter()
        .map(|r| json!({ "row": r.row, "reason": r.reason }))
        .collect();
    let mut corpus = Corpus::from_records(ingest.records).map_err(|e| e.to_string())?;
    let agents = Agents::new(
        Gateway::new(Arc::new(MockProvider::new(seed))).with_retry(RetryPolicy::no_retry()),
        Arc::new(TemplateSet::builtin()),
    );
    let config = PipelineConfig {
        k: k.max(1),
        parallelism: 1,
        seed,
        ..PipelineConfig::default()
    };
    let ledger = Ledger::new();
    run_training_phase(&mut corpus, &agents, &config, &ledger).map_err(|e| e.to_string())?;
    let index = Index::build(corpus.documents()).map_err(|e| e.to_string())?;

    let prompt = PromptRecord::single("demo", prompt).map_err(|e| e.to_string())?;
    let hits = retrieve(&index, &corpus, &prompt, config.k, config.bm25, true)?;
    let report = run_test_phase(
        std::slice::from_ref(&prompt),
        &corpus,
        &index,
        &Backends::uniform(agents),
        &config,
        &ledger,
    )
    .map_err(|e| e.to_string())?;
    let result = match (report.results.first(), report.failures.first()) {
        (Some(r), _) => r,
        (None, Some(f)) => return Err(f.error.clone()),
        (None, None) => return Err("no result".into()),
    };
    let verdict = MockJudge
        .judge(&prompt, &result.optimized_response, &mut CallTape::new())
        .map_err(|e| e.to_string())?;

    let totals = ledger.totals();
    let usage: BTreeMap<&str, Value> = [
        Category::AssetBuilder,
        Category::Optimizer,
        Category::Responder,
    ]
    .into_iter()
    .map(|c| (c.name(), json!(totals.accepted(c))))
    .collect();
    Ok(json!({
        "ingested": corpus.len(),
        "rejects": rejects,
        "hits": hits.iter().map(|h| json!({
            "rank": h.rank,
            "id": h.instance.id(),
            "score": h.score,
            "prompt": h.instance.prompt.text,
            "directives": h.assets.directives,
        })).collect::<Vec<_>>(),
        "report": result.report,
        "optimized_prompt": result.optimized_prompt.text,
        "response": result.optimized_response,
        "fell_back": result.retrieval_empty,
        "judged": verdict.scores,
        "composite": composite_score(&verdict.scores),
        "usage": usage,
    }))
}

fn to_js(result: Result<Value, String>) -> Result<String, JsValue> {
    result
        .map(|v| v.to_string())
        .map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn bm25_explore(docs: &str, query: &str, k: usize, k1: f64, b: f64) -> Result<String, JsValue> {
    to_js(explore(docs, query, k, k1, b))
}

#[wasm_bindgen]
pub fn composite(help: f64, corr: f64, coh: f64, comp: f64, verb: f64) -> Result<String, JsValue> {
    to_js(score([help, corr, coh, comp, verb]))
}

#[wasm_bindgen]
pub fn mock_walkthrough(train_jsonl: &str, prompt: &str, k: usize, seed: u32) -> Result<String, JsValue> {
    to_js(walkthrough(train_jsonl, prompt, k, seed as u64))
}
