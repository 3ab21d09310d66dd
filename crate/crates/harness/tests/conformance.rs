use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use jsonmask::compiler::CompileOptions;
use jsonmask::token::Vocabulary;
use jsonmask_harness::conformance::*;
use jsonmask_harness::report::{failures_table, thresholds_table};
use jsonmask_harness::Engine;

fn write_suite(dir: &Path, files: &[(&str, &str)]) {
    for (name, body) in files {
        fs::write(dir.join(format!("{name}.json")), body).unwrap();
    }
}

const TYPE_FILE: &str = r#"[
  {"description": "integers", "schema": {"type": "integer"},
   "tests": [{"description": "one", "data": 1, "valid": true},
             {"description": "string", "data": "1", "valid": false}]},
  {"description": "remote", "schema": {"$ref": "http://localhost:1234/int.json"},
   "tests": [{"description": "one", "data": 1, "valid": true}]}
]"#;

const BOOLEAN_FILE: &str = r#"[
  {"description": "true", "schema": true,
   "tests": [{"description": "number", "data": 1, "valid": true},
             {"description": "object", "data": {"a": [null]}, "valid": true}]},
  {"description": "false", "schema": false,
   "tests": [{"description": "number", "data": 1, "valid": false},
             {"description": "null", "data": null, "valid": false}]}
]"#;

const FORMAT_FILE: &str = r#"[
  {"description": "dates", "schema": {"format": "date"},
   "tests": [{"description": "bad", "data": "x", "valid": true}]}
]"#;

fn small_suite() -> (tempfile::TempDir, Suite) {
    let dir = tempfile::tempdir().unwrap();
    write_suite(dir.path(), &[("type", TYPE_FILE), ("boolean_schema", BOOLEAN_FILE), ("format", FORMAT_FILE)]);
    let suite = load_suite(dir.path()).unwrap();
    (dir, suite)
}

#[test]
fn loading_drops_format_and_remote_cases() {
    let (dir, suite) = small_suite();
    assert_eq!(suite.files, 3);
    assert_eq!(suite.categories(), ["boolean_schema", "type"]);
    assert_eq!(suite.cases.len(), 3);
    assert_eq!(suite.excluded.len(), 1);
    assert_eq!((suite.excluded[0].category.as_str(), suite.excluded[0].index), ("type", 1));
    assert!(suite.excluded[0].reason.contains("localhost:1234"), "{}", suite.excluded[0].reason);
    // The hash covers every file, dropped ones included.
    assert_eq!(load_suite(dir.path()).unwrap().content_hash, suite.content_hash);
    fs::write(dir.path().join("format.json"), "[]").unwrap();
    assert_ne!(load_suite(dir.path()).unwrap().content_hash, suite.content_hash);
}

#[test]
fn suite_checkout_roots_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let nested = dir.path().join("tests").join("draft2020-12");
    fs::create_dir_all(&nested).unwrap();
    write_suite(&nested, &[("type", TYPE_FILE)]);
    assert_eq!(load_suite(dir.path()).unwrap().cases.len(), 1);
}

#[test]
fn malformed_files_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    write_suite(dir.path(), &[("type", r#"{"description": "not a list"}"#)]);
    assert!(matches!(load_suite(dir.path()), Err(SuiteError::MalformedSuiteFile(..))));
    write_suite(dir.path(), &[("type", r#"[{"description": "x", "schema": {}, "tests": [{"description": "y", "data": 1}]}]"#)]);
    assert!(matches!(load_suite(dir.path()), Err(SuiteError::MalformedSuiteFile(..))));
    assert!(matches!(load_suite(&dir.path().join("missing")), Err(SuiteError::Io { .. })));
}

#[test]
fn boolean_schemas_pass() {
    let (_dir, suite) = small_suite();
    let engine = Engine::bytes();
    for case in suite.cases.iter().filter(|c| c.category == "boolean_schema") {
        let out = run_case(case, &engine);
        assert_eq!(out.status, CaseStatus::Pass, "{}: {out:?}", case.description);
    }
}

#[test]
fn walks_classify_instances() {
    let (_dir, suite) = small_suite();
    let out = run_case(suite.cases.iter().find(|c| c.category == "type").unwrap(), &Engine::bytes());
    assert_eq!(out.compile, CompileVerdict::Compiled);
    let verdicts: Vec<(bool, bool)> = out.instances.iter().map(|i| (i.valid, i.accepted)).collect();
    assert_eq!(verdicts, [(true, true), (false, false)]);
}

fn overlapping_one_of() -> TestCase {
    let dir = tempfile::tempdir().unwrap();
    let file = r#"[{"description": "overlap", "schema": {"oneOf": [{"type": "integer"}, {"type": "integer", "minimum": 2}]},
      "tests": [{"description": "first only", "data": 1, "valid": true},
                {"description": "neither", "data": "foo", "valid": false},
                {"description": "both", "data": 3, "valid": false}]}]"#;
    write_suite(dir.path(), &[("oneOf", file)]);
    load_suite(dir.path()).unwrap().cases.remove(0)
}

#[test]
fn one_of_as_any_of_is_under_constrained() {
    let case = overlapping_one_of();
    let sound = run_case(&case, &Engine::bytes());
    assert_eq!(sound.failures, BTreeSet::from([FailureKind::CompileError]));
    assert!(matches!(sound.compile, CompileVerdict::Rejected(_)));

    let loose = Engine::new(Vocabulary::bytes(), CompileOptions { oneof_as_anyof: true, ..CompileOptions::default() });
    let out = run_case(&case, &loose);
    assert_eq!(out.failures, BTreeSet::from([FailureKind::UnderConstrained]));
    assert_eq!(out.status, CaseStatus::Fail);
}

fn outcome(category: &str, index: usize, failures: &[FailureKind]) -> CaseOutcome {
    let failures: BTreeSet<FailureKind> = failures.iter().copied().collect();
    CaseOutcome {
        category: category.to_string(),
        index,
        description: format!("case {index}"),
        status: if failures.is_empty() { CaseStatus::Pass } else { CaseStatus::Fail },
        failures,
        compile: CompileVerdict::Compiled,
        instances: Vec::new(),
    }
}

#[test]
fn aggregation_uses_strict_thresholds() {
    let over = [FailureKind::OverConstrained];
    let outs = vec![outcome("a", 0, &[]), outcome("a", 1, &[]), outcome("a", 2, &[]), outcome("a", 3, &over), outcome("b", 0, &over), outcome("b", 1, &[])];
    let cov = aggregate(&outs);
    assert_eq!(cov.categories[0].proportion, 0.75);
    assert_eq!(cov.categories[0].failures, BTreeMap::from([(FailureKind::OverConstrained, 1)]));
    assert_eq!(cov.categories[1].proportion, 0.5);
    // 0.75 is not above 75% and 0.5 is not above 50%.
    assert_eq!(cov.thresholds, Thresholds { minimal: 2, partial: 2, moderate: 1, high: 0, full: 0 });
}

#[test]
fn breakdown_counts_categories_not_cases() {
    use FailureKind::*;
    let mut outs = Vec::new();
    for c in 0..25 {
        outs.push(outcome(&format!("c{c}"), 0, &[CompileError]));
        outs.push(outcome(&format!("c{c}"), 1, &[CompileError]));
    }
    for c in 0..7 {
        outs.push(outcome(&format!("c{c}"), 2, &[OverConstrained]));
    }
    outs.push(outcome("c0", 3, &[UnderConstrained, OverConstrained]));
    let b = failure_breakdown(&outs);
    assert_eq!(b, FailureBreakdown { compile_error: 25, over_constrained: 7, under_constrained: 1 });
    let table = failures_table(&[("Guidance".to_string(), b)]);
    assert!(table.lines().any(|l| l.starts_with("Compile Error") && l.trim_end().ends_with("25")), "{table}");
}

#[test]
fn thresholds_render_by_row() {
    let guidance = Thresholds { minimal: 30, partial: 25, moderate: 21, high: 17, full: 13 };
    let table = thresholds_table(&[("Guidance".to_string(), guidance), ("Other".to_string(), Thresholds::default())]);
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 6);
    let values: Vec<Vec<&str>> = lines[1..].iter().map(|l| l.split_whitespace().rev().take(2).collect()).collect();
    assert_eq!(values, [["0", "30"], ["0", "25"], ["0", "21"], ["0", "17"], ["0", "13"]]);
    assert!(lines[3].starts_with("Moderate coverage (>50%)"));
}

#[test]
fn divergences_explain_over_constraints() {
    let dir = tempfile::tempdir().unwrap();
    let file = r#"[{"description": "ints", "schema": {"type": "integer"},
      "tests": [{"description": "float one", "data": 1.0, "valid": true}]}]"#;
    write_suite(dir.path(), &[("type", file)]);
    let suite = load_suite(dir.path()).unwrap();
    let outs = run_suite(&suite, &Engine::bytes(), 1);
    let unexplained = unexplained_over_constraints(&outs, &[]);
    assert_eq!(unexplained, ["type / ints / float one"]);
    let listed = Divergence { category: "type".into(), case: "ints".into(), instance: "float one".into(), reason: "r".into() };
    assert!(unexplained_over_constraints(&outs, &[listed]).is_empty());

    let committed = load_divergences(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/conformance/divergences.json")).unwrap();
    assert!(!committed.is_empty());
    assert!(committed.iter().all(|d| !d.reason.is_empty()));
}

#[test]
fn replay_reproduces_valid_instances() {
    let (_dir, suite) = small_suite();
    let engine = Engine::bytes();
    for case in &suite.cases {
        assert!(replay_case(case, &engine).is_empty(), "{}", case.description);
    }
}

#[test]
fn runs_are_deterministic() {
    let (_dir, suite) = small_suite();
    let engine = Engine::bytes();
    let a = serde_json::to_string(&ConformanceReport::new(&suite, run_suite(&suite, &engine, 1))).unwrap();
    let b = serde_json::to_string(&ConformanceReport::new(&suite, run_suite(&suite, &engine, 2))).unwrap();
    assert_eq!(a, b);
}

#[test]
fn vendored_suite_shape() {
    let suite = load_suite(&Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/json-schema-test-suite")).unwrap();
    assert_eq!(suite.categories().len(), 43);
    assert!(!suite.categories().iter().any(|c| DROPPED_CATEGORIES.contains(&c.as_str())));
    assert!(suite.excluded.iter().all(|e| !e.reason.is_empty()));
}
