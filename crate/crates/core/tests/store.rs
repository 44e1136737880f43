mod support;

use assetopt::model::ReasoningAssets;
use assetopt::store::{
    decode_corpus, encode_corpus, load_corpus, parse_dataset, save_corpus, Corpus, DatasetFormat,
    StoreError,
};
use proptest::prelude::*;
use proptest::test_runner::{RngAlgorithm, TestRng};
use support::fixtures::training_records;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn encode_decode_is_identity(records in support::records::records(20)) {
        let bytes = encode_corpus(&records);
        prop_assert_eq!(decode_corpus(&bytes).unwrap(), records.clone());
        prop_assert_eq!(encode_corpus(&decode_corpus(&bytes).unwrap()), bytes);
    }

    #[test]
    fn any_single_byte_change_is_detected(
        records in support::records::records(4),
        pos in any::<prop::sample::Index>(),
        flip in 1u8..=255,
    ) {
        let mut bytes = encode_corpus(&records);
        let i = pos.index(bytes.len());
        bytes[i] ^= flip;
        prop_assert!(matches!(decode_corpus(&bytes), Err(StoreError::ChecksumMismatch)));
    }
}

#[test]
fn every_byte_position_of_a_small_corpus() {
    let records = training_records(3);
    let clean = encode_corpus(&records);
    let mut rng = TestRng::deterministic_rng(RngAlgorithm::ChaCha);
    for i in 0..clean.len() {
        let mut bytes = clean.clone();
        bytes[i] ^= (rng.random::<u8>() % 255) + 1;
        assert!(
            matches!(decode_corpus(&bytes), Err(StoreError::ChecksumMismatch)),
            "byte {i} not detected"
        );
    }
    assert!(matches!(decode_corpus(&clean[..clean.len() - 1]), Err(StoreError::ChecksumMismatch)));
}

#[test]
fn save_load_keeps_order_and_length() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    let records = training_records(10);
    save_corpus(&path, &records).unwrap();
    let back = load_corpus(&path).unwrap();
    assert_eq!(back, records);
    assert!(matches!(load_corpus(&dir.path().join("missing")), Err(StoreError::FileNotFound(_))));
}

#[test]
fn future_schema_version_is_refused() {
    // Rewrites the manifest with a new schema number and re-seals it the way
    // a newer writer would.
    let bytes = encode_corpus(&training_records(2));
    let text = String::from_utf8(bytes).unwrap();
    let (records, manifest) = text.trim_end().rsplit_once('\n').unwrap();
    let marker = ",\"integrity\":\"";
    let head = &manifest[..manifest.rfind(marker).unwrap()];
    let head = head.replace("\"schema_version\":1", "\"schema_version\":2");
    let covered = format!("{records}\n{head}{marker}");
    let digest = assetopt::digest::sha256_hex(covered.as_bytes());
    let resealed = format!("{covered}{digest}\"}}\n");
    assert!(matches!(
        decode_corpus(resealed.as_bytes()),
        Err(StoreError::SchemaVersionUnsupported { found: 2, supported: 1 })
    ));
}

fn assets_for(id: &str) -> ReasoningAssets {
    ReasoningAssets {
        source_id: id.into(),
        card: "card".into(),
        diagnosis: "diagnosis".into(),
        directives: vec!["be brief".into()],
    }
}

#[test]
fn appending_assets_leaves_instance_bytes_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    let mut corpus = Corpus::create(&path, training_records(4)).unwrap();
    let instance_json = |c: &Corpus| -> Vec<String> {
        c.records().iter().map(|r| serde_json::to_string(&r.instance).unwrap()).collect()
    };
    let before = instance_json(&corpus);
    corpus.append_assets("t1", assets_for("t1"), Some("mock".into()), false).unwrap();
    corpus.append_assets("t3", assets_for("t3"), Some("mock".into()), false).unwrap();
    let reloaded = Corpus::load(&path).unwrap();
    assert_eq!(instance_json(&reloaded), before);
    assert_eq!(reloaded.get("t1").unwrap().assets, Some(assets_for("t1")));
    assert_eq!(reloaded.asset_coverage(), 0.5);
    assert!(matches!(
        corpus.append_assets("t1", assets_for("t1"), None, false),
        Err(StoreError::AssetsAlreadyPresent(_))
    ));
    assert!(matches!(
        corpus.append_assets("nope", assets_for("nope"), None, false),
        Err(StoreError::UnknownId(_))
    ));
    corpus.append_assets("t1", assets_for("t1"), None, true).unwrap();
}

#[test]
fn checksum_ignores_timestamps() {
    let a = training_records(5);
    let mut b = a.clone();
    for r in &mut b {
        r.created_at = "2030-06-01T12:00:00Z".into();
    }
    let ca = Corpus::from_records(a).unwrap();
    let cb = Corpus::from_records(b).unwrap();
    assert_eq!(ca.checksum(), cb.checksum());
    assert_eq!(ca.documents_digest(), cb.documents_digest());
}

#[test]
fn ingest_examples() {
    let row = |h: u32| {
        format!(r#"{{"prompt":"p","response":"r","helpfulness":{h},"correctness":1,"coherence":2,"complexity":3,"verbosity":4}}"#)
    };
    let good = [row(1), row(2), row(3)].join("\n");
    let report = parse_dataset(&good, DatasetFormat::HelpsteerJsonl).unwrap();
    assert_eq!((report.count(), report.rejects.len()), (3, 0));
    assert_eq!(report.records[2].id(), "2");

    let bad = [row(1), row(7)].join("\n");
    let report = parse_dataset(&bad, DatasetFormat::HelpsteerJsonl).unwrap();
    assert_eq!(report.count(), 1);
    assert!(report.rejects[0].reason.starts_with("ScoreOutOfRange"), "{}", report.rejects[0].reason);

    let empty = parse_dataset("", DatasetFormat::HelpsteerJsonl).unwrap();
    assert_eq!(empty.count(), 0);
    assert!(!empty.warnings.is_empty());

    let csv = "prompt,response,helpfulness,correctness,coherence,complexity,verbosity,extra\n\
               hi,there,1,2,3,4,0,x\n";
    let report = parse_dataset(csv, DatasetFormat::HelpsteerCsv).unwrap();
    assert_eq!(report.count(), 1);
    assert!(report.ignored_fields.contains("extra"));
}

#[test]
fn multi_turn_prompts_flatten_with_role_labels() {
    let line = r#"{"prompt":"first question<extra_id_1>Assistant\nan answer<extra_id_1>User\nfollow up","response":"r","helpfulness":1,"correctness":1,"coherence":1,"complexity":1,"verbosity":1}"#;
    let report = parse_dataset(line, DatasetFormat::HelpsteerJsonl).unwrap();
    let prompt = &report.records[0].instance.prompt;
    assert_eq!(prompt.turns.len(), 3);
    assert_eq!(prompt.text, "USER: first question\n\nASSISTANT: an answer\n\nUSER: follow up");
}
