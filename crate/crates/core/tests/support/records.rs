//! Random corpus records for persistence tests.

#![allow(dead_code)]

use assetopt::model::{PromptRecord, ReasoningAssets, ScoreVector, TrainingInstance, Turn};
use assetopt::store::CorpusRecord;
use proptest::prelude::*;

fn text() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9]\\PC{0,40}"
}

fn score() -> impl Strategy<Value = f64> {
    prop_oneof![(0u8..=4).prop_map(f64::from), 0.0f64..=4.0]
}

fn prompt(id: String) -> impl Strategy<Value = PromptRecord> {
    prop_oneof![
        text().prop_map(move |t| (t, None)),
        prop::collection::vec((prop::sample::select(vec!["user", "assistant"]), text()), 2..4)
            .prop_map(|turns| (String::new(), Some(turns))),
    ]
    .prop_map(move |(t, turns)| match turns {
        None => PromptRecord::single(id.clone(), t).unwrap(),
        Some(turns) => PromptRecord::from_turns(
            id.clone(),
            turns.into_iter().map(|(r, t)| Turn::new(r, t)).collect(),
        )
        .unwrap(),
    })
}

pub fn record(ordinal: usize) -> impl Strategy<Value = CorpusRecord> {
    let id = format!("r{ordinal}");
    (
        prompt(id.clone()),
        text(),
        [score(), score(), score(), score(), score()],
        prop::option::of((text(), text(), prop::collection::vec(text(), 1..4))),
        (1970u32..2100, 1u32..=12, 1u32..=28, 0u32..24, 0u32..60, 0u32..60),
        prop::option::of("[a-z]{1,8}(:[a-z0-9-]{1,10})?"),
    )
        .prop_map(move |(prompt, response, scores, assets, (y, mo, d, h, mi, se), model)| CorpusRecord {
            assets: assets.map(|(card, diagnosis, directives)| ReasoningAssets {
                source_id: id.clone(),
                card,
                diagnosis,
                directives,
            }),
            instance: TrainingInstance {
                prompt,
                response,
                scores: ScoreVector::new(scores).unwrap(),
            },
            created_at: format!("{y:04}-{mo:02}-{d:02}T{h:02}:{mi:02}:{se:02}Z"),
            asset_model_id: model,
        })
}

/// `n` records with distinct ids.
pub fn records(n: usize) -> impl Strategy<Value = Vec<CorpusRecord>> {
    (0..n).map(record).collect::<Vec<_>>()
}
