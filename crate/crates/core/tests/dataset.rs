use std::collections::BTreeMap;
use std::path::PathBuf;

use jsonmask::compiler::{compile, CompileOptions, CompileOutcome};
use jsonmask::json::to_canonical_string;
use jsonmask::schema::dataset::{ingest_documents, lower_median, DropReason, GroupBy, StatsError};
use jsonmask::schema::{ingest_dataset, normalize, schema_stats, ComplexityTier, DatasetRecord, IngestOptions};
use serde::Deserialize;

fn corpus() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/mini-corpus")
}

#[derive(Deserialize)]
struct Label {
    field_count: u64,
    tier: ComplexityTier,
}

fn labels() -> BTreeMap<String, Label> {
    serde_json::from_slice(&std::fs::read(corpus().join("_labels.json")).unwrap()).unwrap()
}

fn records() -> Vec<DatasetRecord> {
    ingest_dataset(&corpus(), &IngestOptions::default()).unwrap().0
}

#[test]
fn mini_corpus_matches_hand_labels() {
    let (records, report) = ingest_dataset(&corpus(), &IngestOptions::default()).unwrap();
    assert_eq!(report.read, 52);
    assert_eq!(records.len(), 50);
    assert_eq!(report.dropped_by_reason.get(&DropReason::Duplicate), Some(&1));
    assert_eq!(report.dropped_by_reason.get(&DropReason::Empty), Some(&1));
    let labels = labels();
    assert_eq!(labels.len(), 50);
    for r in &records {
        let l = &labels[r.source_id()];
        assert_eq!((r.field_count, r.tier), (l.field_count, l.tier), "{}", r.source_id());
    }
    for tier in ComplexityTier::ALL {
        assert!(records.iter().any(|r| r.tier == tier), "no {tier} schema");
    }
    assert!(records.iter().any(|r| r.dataset == "glaive"));
}

#[test]
fn every_fixture_schema_compiles() {
    for r in records() {
        let ir = normalize(&r.schema).unwrap();
        let out = compile(&ir, &CompileOptions::default());
        assert!(matches!(out, CompileOutcome::Automaton(_)), "{}: {out:?}", r.source_id());
    }
}

#[test]
fn dedup_ignores_key_order() {
    let docs = vec![
        ("a".to_string(), br#"{"type":"object","properties":{"x":{"type":"integer","minimum":1}}}"#.to_vec()),
        ("b".to_string(), br#"{"properties":{"x":{"minimum":1,"type":"integer"}},"type":"object"}"#.to_vec()),
        ("c".to_string(), br#"{"properties":{"x":{"minimum":2,"type":"integer"}},"type":"object"}"#.to_vec()),
    ];
    let (records, report) = ingest_documents(docs, |_| "d".to_string(), &IngestOptions::default());
    let ids: Vec<&str> = records.iter().map(|r| r.source_id()).collect();
    assert_eq!(ids, ["a", "c"]);
    assert_eq!(report.dropped[0].source_id, "b");
}

#[test]
fn cleaning_drops_with_reasons() {
    let docs: Vec<(String, Vec<u8>)> = [
        ("empty", "{}"),
        ("broken", "{\"type\":"),
        ("array", "[1,2]"),
        ("remote", r#"{"$ref":"http://remote/x.json"}"#),
        ("bad", r#"{"type":"bogus"}"#),
        ("ok", r#"{"type":"null"}"#),
    ]
    .into_iter()
    .map(|(a, b)| (a.to_string(), b.as_bytes().to_vec()))
    .collect();
    let (records, report) = ingest_documents(docs, |_| "d".to_string(), &IngestOptions::default());
    assert_eq!(records.len(), 1);
    let reasons: Vec<DropReason> = report.dropped.iter().map(|d| d.reason).collect();
    assert_eq!(
        reasons,
        [DropReason::Empty, DropReason::MalformedJson, DropReason::NotASchema, DropReason::UnresolvedExternalRef, DropReason::InvalidSchema]
    );
}

#[test]
fn strip_fields_before_checking_emptiness() {
    let docs = vec![("x".to_string(), br#"{"command":"run","config":{"a":1}}"#.to_vec())];
    let opts = IngestOptions { strip_fields: vec!["command".into(), "config".into()], ..IngestOptions::default() };
    let (records, report) = ingest_documents(docs, |_| "d".to_string(), &opts);
    assert!(records.is_empty());
    assert_eq!(report.dropped[0].reason, DropReason::Empty);
}

#[test]
fn reingesting_is_idempotent() {
    let first = records();
    let docs = first.iter().map(|r| (r.source_id().to_string(), to_canonical_string(&r.schema.raw).into_bytes())).collect();
    let (second, report) = ingest_documents(docs, |id| first.iter().find(|r| r.source_id() == id).unwrap().dataset.clone(), &IngestOptions::default());
    assert_eq!(report.kept, first.len());
    assert_eq!(second, first);
}

#[test]
fn ndjson_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lines.jsonl");
    std::fs::write(&path, "{\"type\":\"string\"}\n\n{\"type\":\"integer\"}\n{\"type\":\"string\"}\n").unwrap();
    let (records, report) = ingest_dataset(&path, &IngestOptions::default()).unwrap();
    let ids: Vec<&str> = records.iter().map(|r| r.source_id()).collect();
    assert_eq!(ids, ["lines:1", "lines:3"]);
    assert_eq!(report.dropped[0].source_id, "lines:4");
    assert_eq!(records[0].dataset, "lines");
}

/// Sort-based oracle, independent of the library's median.
fn sorted_lower_median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[(v.len() - 1) / 2]
}

#[test]
fn stats_match_sort_oracle() {
    let records = records();
    let table = schema_stats(&records, GroupBy::Tier).unwrap();
    assert_eq!(table.rows.len(), 5);
    for row in &table.rows {
        let group: Vec<&DatasetRecord> = records.iter().filter(|r| r.tier.to_string() == row.group).collect();
        assert_eq!(row.count, group.len());
        let fields: Vec<f64> = group.iter().map(|r| r.field_count as f64).collect();
        assert_eq!(row.field_count.median, sorted_lower_median(fields.clone()));
        assert_eq!(row.field_count.max, fields.iter().copied().fold(0.0, f64::max));
        assert_eq!(row.depth.median, sorted_lower_median(group.iter().map(|r| r.depth as f64).collect()));
        assert_eq!(row.max_fan_out.median, sorted_lower_median(group.iter().map(|r| r.max_fan_out as f64).collect()));
    }
    let single = schema_stats(&records[..1], GroupBy::Dataset).unwrap();
    assert_eq!(single.rows[0].field_count.median, single.rows[0].field_count.max);
    assert_eq!(schema_stats(&[], GroupBy::Dataset), Err(StatsError::EmptyInput));
    assert!(table.to_text().starts_with("Dataset"));
}

#[test]
fn median_convention() {
    assert_eq!(lower_median(&[5.0, 1.0, 3.0, 2.0]), Some(2.0));
    assert_eq!(lower_median(&[7]), Some(7));
}
