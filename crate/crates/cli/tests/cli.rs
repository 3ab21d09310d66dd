use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use jsonmask::compiler::{compile, CompileOptions, MatcherState, SyntaxMode};
use jsonmask::json::parse_json;
use jsonmask::schema::{normalize, parse_schema, validate_instance};
use jsonmask::token::{advance_token, Vocabulary};

fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jsonmask")).current_dir(dir).args(args).output().expect("binary runs")
}

fn run(args: &[&str]) -> Output {
    run_in(Path::new(env!("CARGO_MANIFEST_DIR")), args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Writes `files` into a fresh directory.
fn scratch(files: &[(&str, &str)]) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in files {
        fs::write(dir.path().join(name), body).unwrap();
    }
    dir
}

const OBJECT: &str = r#"{"type":"object","properties":{"a":{"type":"integer","minimum":0}},"required":["a"],"additionalProperties":false}"#;

#[test]
fn help_goes_to_stdout() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for cmd in ["ingest", "stats", "compile", "validate", "mask", "generate", "walk", "conformance", "bench-coverage", "bench-efficiency", "report"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
}

#[test]
fn usage_errors_exit_2_with_one_line() {
    let cases: [&[&str]; 3] = [&["frobnicate"], &["validate", "--format", "xml"], &[]];
    for args in cases {
        let o = run(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert_eq!(stderr(&o).trim_end().lines().count(), 1, "{args:?}: {}", stderr(&o));
    }
    let dir = scratch(&[("s.json", OBJECT)]);
    let o = run_in(dir.path(), &["validate", "--schema", "s.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--instance"));
    let o = run_in(dir.path(), &["validate", "--schema", "missing.json", "--instance", "s.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_reports_validity() {
    let dir = scratch(&[("s.json", OBJECT), ("good.json", r#"{"a": 3}"#), ("bad.json", r#"{"a": -1, "b": 2}"#)]);
    let o = run_in(dir.path(), &["validate", "--schema", "s.json", "--instance", "good.json"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "valid");
    let o = run_in(dir.path(), &["validate", "--schema", "s.json", "--instance", "bad.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("invalid\n"));
    let o = run_in(dir.path(), &["validate", "--schema", "s.json", "--instance", "bad.json", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["valid"], false);
    assert!(v["violations"].as_array().unwrap().len() >= 2);
}

/// Tokens whose bytes advance the matcher after `prefix`, found one by one.
fn oracle_mask(schema: &str, vocab: &Vocabulary, prefix: &[u8]) -> BTreeSet<u32> {
    let a = compile(&normalize(&parse_schema(schema.as_bytes()).unwrap()).unwrap(), &CompileOptions::default()).automaton().unwrap();
    let s = MatcherState::new(&a, SyntaxMode::Compact).advanced(&a, prefix).unwrap();
    vocab
        .iter()
        .filter(|(id, _)| if *id == vocab.eos_id() { s.can_terminate(&a) } else { advance_token(&a, &s, vocab, *id).is_ok() })
        .map(|(id, _)| id)
        .collect()
}

fn mask_ids(out: &str) -> BTreeSet<u32> {
    out.lines().map(|l| l.split('\t').next().unwrap().parse().unwrap()).collect()
}

#[test]
fn mask_matches_the_oracle() {
    let dir = scratch(&[("s.json", OBJECT)]);
    let o = run_in(dir.path(), &["mask", "--schema", "s.json", "--prefix", r#"{"a":"#]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(mask_ids(&out), oracle_mask(OBJECT, &Vocabulary::bytes(), br#"{"a":"#));
    // Digits, plus the minus sign of `-0`.
    assert!(out.lines().all(|l| l.split('\t').nth(1).unwrap().bytes().all(|b| b.is_ascii_digit() || b == b'-')), "{out}");

    let vocab_path = data("vocab/bpe-1000.json");
    let bpe = Vocabulary::load(&vocab_path).unwrap();
    for prefix in ["", "{", r#"{"a":1"#] {
        let o = run_in(dir.path(), &["mask", "--schema", "s.json", "--vocab", vocab_path.to_str().unwrap(), "--prefix", prefix]);
        assert_eq!(mask_ids(&stdout(&o)), oracle_mask(OBJECT, &bpe, prefix.as_bytes()), "{prefix}");
    }

    let o = run_in(dir.path(), &["mask", "--schema", "s.json", "--prefix", "[", "--format", "json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("byte 0"));
}

#[test]
fn generate_is_valid_and_deterministic() {
    let dir = scratch(&[("s.json", OBJECT)]);
    let args = ["generate", "--schema", "s.json", "--seed", "4", "--fast-forward", "--quiet"];
    let first = run_in(dir.path(), &args);
    assert_eq!(first.status.code(), Some(0), "{}", stderr(&first));
    let text = stdout(&first);
    let ir = normalize(&parse_schema(OBJECT.as_bytes()).unwrap()).unwrap();
    assert!(validate_instance(&ir, &parse_json(text.trim_end().as_bytes()).unwrap()).unwrap().valid, "{text}");
    assert_eq!(stdout(&run_in(dir.path(), &args)), text);
    // Nothing lands in the working directory without --out.
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);

    let out = dir.path().join("out");
    run_in(dir.path(), &["generate", "--schema", "s.json", "--out", "out", "--quiet"]);
    let record: serde_json::Value = serde_json::from_slice(&fs::read(out.join("generation.json")).unwrap()).unwrap();
    assert_eq!(record["compliant"], true);
}

#[test]
fn generate_uses_the_config_source() {
    let dir = scratch(&[("s.json", r#"{"type":"boolean"}"#), ("c.json", r#"{"source": {"kind": "uniform"}, "seed": 2, "max_tokens": 8}"#)]);
    let o = run_in(dir.path(), &["generate", "--schema", "s.json", "--config", "c.json", "--quiet"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(["true", "false"].contains(&stdout(&o).trim()));
    let bad = scratch(&[("c.json", r#"{"sauce": 1}"#), ("s.json", "{}")]);
    assert_eq!(run_in(bad.path(), &["generate", "--schema", "s.json", "--config", "c.json"]).status.code(), Some(2));
}

#[test]
fn walk_and_compile() {
    let dir = scratch(&[("s.json", OBJECT), ("good.json", r#"{ "a" : 12 }"#), ("bad.json", r#"{"a":"x"}"#), ("u.json", r#"{"uniqueItems":true}"#)]);
    let o = run_in(dir.path(), &["walk", "--schema", "s.json", "--instance", "good.json"]);
    assert_eq!((o.status.code(), stdout(&o).trim()), (Some(0), "accepted"));
    let o = run_in(dir.path(), &["walk", "--schema", "s.json", "--instance", "bad.json"]);
    assert_eq!((o.status.code(), stdout(&o).trim()), (Some(1), "rejected at byte 5"));

    let o = run_in(dir.path(), &["compile", "--schema", "s.json"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("compiled in"));
    let o = run_in(dir.path(), &["compile", "--schema", "u.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("uniqueItems"), "{}", stderr(&o));
}

#[test]
fn conformance_exit_codes_and_report() {
    let passing = r#"[{"description": "ints", "schema": {"type": "integer"},
        "tests": [{"description": "one", "data": 1, "valid": true}, {"description": "s", "data": "s", "valid": false}]}]"#;
    let failing = r#"[{"description": "unique", "schema": {"uniqueItems": true},
        "tests": [{"description": "empty", "data": [], "valid": true}]}]"#;
    let dir = scratch(&[]);
    let suite = dir.path().join("suite");
    fs::create_dir(&suite).unwrap();
    fs::write(suite.join("type.json"), passing).unwrap();
    let o = run_in(dir.path(), &["conformance", "--suite", "suite", "--quiet"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    fs::write(suite.join("uniqueItems.json"), failing).unwrap();
    let o = run_in(dir.path(), &["conformance", "--suite", "suite", "--out", "r", "--jobs", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("Moderate coverage (>50%)"));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("r/conformance.json")).unwrap()).unwrap();
    assert_eq!(report["categories"], 2);
    assert_eq!(report["breakdown"]["compile_error"], 1);
}

#[test]
fn ingest_and_stats() {
    let corpus = data("mini-corpus");
    let dir = scratch(&[]);
    let o = run_in(dir.path(), &["ingest", "--corpus", corpus.to_str().unwrap(), "--out", "o"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("kept     50"), "{}", stdout(&o));
    assert_eq!(fs::read_to_string(dir.path().join("o/records.jsonl")).unwrap().lines().count(), 50);

    let o = run_in(dir.path(), &["stats", "--corpus", corpus.to_str().unwrap(), "--group-by", "tier", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 6, "{text}");
    let counts: usize = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(counts, 50);
}

#[test]
fn coverage_reports_round_trip() {
    let corpus = scratch(&[
        ("flag.json", r#"{"type":"boolean"}"#),
        ("point.json", r#"{"type":"object","properties":{"x":{"type":"integer"}},"required":["x"]}"#),
        ("uniq.json", r#"{"type":"array","uniqueItems":true}"#),
    ]);
    let dir = scratch(&[]);
    let c = corpus.path().to_str().unwrap();
    let o = run_in(dir.path(), &["bench-coverage", "--corpus", c, "--out", "a", "--jobs", "1", "--max-tokens", "64"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = stdout(&o);
    assert!(table.contains("0.67"), "{table}");
    run_in(dir.path(), &["bench-coverage", "--corpus", c, "--out", "b", "--jobs", "2", "--max-tokens", "64", "--quiet"]);
    let read = |p: &str| fs::read(dir.path().join(p)).unwrap();
    assert_eq!(read("a/coverage.json"), read("b/coverage.json"));
    assert_eq!(read("a/coverage.csv"), read("b/coverage.csv"));

    let o = run_in(dir.path(), &["report", "a/coverage.json", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(o.stdout, read("a/coverage.csv"));
    let o = run_in(dir.path(), &["report", "a/coverage.json"]);
    assert_eq!(stdout(&o), table);
}

#[test]
fn efficiency_with_configured_variants() {
    let corpus = scratch(&[
        ("fixed.json", r#"{"type":"object","properties":{"kind":{"const":"pt"}},"required":["kind"],"additionalProperties":false}"#),
        ("flag.json", r#"{"type":"boolean"}"#),
    ]);
    let config = format!(
        r#"{{"corpus": [{:?}], "variants": [{{"name": "plain"}}, {{"name": "ff", "fast_forward": true}}, {{"name": "lm", "masking": false, "max_tokens": 4}}]}}"#,
        corpus.path()
    );
    let dir = scratch(&[("c.json", &config)]);
    let o = run_in(dir.path(), &["bench-efficiency", "--config", "c.json", "--out", "o", "--jobs", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("2 schemas declared by every variant"), "{text}");
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("o/efficiency.json")).unwrap()).unwrap();
    let names: Vec<&str> = report["variants"].as_array().unwrap().iter().map(|v| v["name"].as_str().unwrap()).collect();
    assert_eq!(names, ["plain", "ff", "lm"]);
}
