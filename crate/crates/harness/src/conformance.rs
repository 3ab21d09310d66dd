//! Token-walk conformance runs over the official JSON Schema test suite.
//!
//! Each case's schema is compiled and every instance's canonical compact
//! serialization is walked through the automaton. Valid instances that are
//! blocked make the case over-constrained; invalid ones that get through
//! make it under-constrained.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use jsonmask::compiler::{compile, CompileOutcome, KeywordManifest, SupportLevel};
use jsonmask::json::{parse_json, to_canonical_string, JsonValue};
use jsonmask::schema::{normalize, Draft, NormalizeError, SchemaDocument};
use jsonmask::token::{constrained_decode, walk_instance, DecodeOptions, ReplaySource, Termination, WalkOutcome};

use crate::Engine;

/// Categories left out entirely: string formats are annotations by default
/// and the suite's format tests assume assertion behavior.
pub const DROPPED_CATEGORIES: &[&str] = &["format"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestInstance {
    pub description: String,
    pub data: JsonValue,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub category: String,
    /// Position within the category file.
    pub index: usize,
    pub description: String,
    pub schema: SchemaDocument,
    pub tests: Vec<TestInstance>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Excluded {
    pub category: String,
    pub index: usize,
    pub description: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Suite {
    pub cases: Vec<TestCase>,
    pub excluded: Vec<Excluded>,
    /// Category files present in the snapshot, before filtering.
    pub files: usize,
    /// SHA-256 over the category files in name order.
    pub content_hash: String,
}

impl Suite {
    /// Categories with at least one remaining case, sorted.
    pub fn categories(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.cases.iter().map(|c| c.category.as_str()).collect();
        set.into_iter().map(String::from).collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SuiteError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed suite file {0}: {1}")]
    MalformedSuiteFile(PathBuf, String),
}

/// Why a case needs resources outside its own document.
fn remote_reason(doc: &SchemaDocument) -> Option<String> {
    fn custom_meta(v: &JsonValue) -> Option<String> {
        match v {
            JsonValue::Object(map) => {
                if let Some(JsonValue::String(uri)) = map.get("$schema") {
                    if Draft::from_uri(uri).is_none() {
                        return Some(uri.clone());
                    }
                }
                map.values().find_map(custom_meta)
            }
            JsonValue::Array(items) => items.iter().find_map(custom_meta),
            _ => None,
        }
    }
    if let Err(NormalizeError::UnresolvedExternalRef(uri)) = normalize(doc) {
        // Official meta-schemas are well known and stay in; the engine
        // rejects them like any other unresolvable reference.
        if !is_official_meta(&uri) {
            return Some(format!("remote reference {uri}"));
        }
    }
    custom_meta(&doc.raw).map(|uri| format!("custom meta-schema {uri}"))
}

fn is_official_meta(uri: &str) -> bool {
    uri.strip_prefix("https://").or_else(|| uri.strip_prefix("http://")).is_some_and(|rest| rest.starts_with("json-schema.org/"))
}

fn field<'a>(v: &'a JsonValue, key: &str, path: &Path) -> Result<&'a JsonValue, SuiteError> {
    v.get(key).ok_or_else(|| SuiteError::MalformedSuiteFile(path.to_path_buf(), format!("missing {key:?}")))
}

fn text(v: &JsonValue) -> String {
    v.as_str().unwrap_or_default().to_string()
}

/// Loads a suite directory laid out as one JSON file per category. A suite
/// checkout root is accepted too; its draft 2020-12 tests are used.
pub fn load_suite(dir: &Path) -> Result<Suite, SuiteError> {
    let nested = dir.join("tests").join("draft2020-12");
    let dir = if nested.is_dir() { nested } else { dir.to_path_buf() };
    let io = |source| SuiteError::Io { path: dir.clone(), source };
    let mut files: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let mut hasher = Sha256::new();
    let mut suite = Suite { cases: Vec::new(), excluded: Vec::new(), files: files.len(), content_hash: String::new() };
    for path in &files {
        let bytes = fs::read(path).map_err(|source| SuiteError::Io { path: path.clone(), source })?;
        hasher.update(&bytes);
        let category = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        if DROPPED_CATEGORIES.contains(&category.as_str()) {
            continue;
        }
        let bad = |m: String| SuiteError::MalformedSuiteFile(path.clone(), m);
        let root = parse_json(&bytes).map_err(|e| bad(e.to_string()))?;
        let cases = root.as_array().ok_or_else(|| bad("top level is not an array".into()))?;
        for (index, case) in cases.iter().enumerate() {
            let description = text(field(case, "description", path)?);
            let schema = SchemaDocument::new(field(case, "schema", path)?.clone(), format!("{category}/{index}"))
                .map_err(|e| bad(format!("case {index}: {e}")))?;
            let mut tests = Vec::new();
            for t in field(case, "tests", path)?.as_array().ok_or_else(|| bad(format!("case {index}: tests is not an array")))? {
                tests.push(TestInstance {
                    description: text(field(t, "description", path)?),
                    data: field(t, "data", path)?.clone(),
                    valid: field(t, "valid", path)?.as_bool().ok_or_else(|| bad(format!("case {index}: valid is not a boolean")))?,
                });
            }
            if tests.is_empty() {
                return Err(bad(format!("case {index} has no tests")));
            }
            match remote_reason(&schema) {
                Some(reason) => suite.excluded.push(Excluded { category: category.clone(), index, description, reason }),
                None => suite.cases.push(TestCase { category: category.clone(), index, description, schema, tests }),
            }
        }
    }
    suite.content_hash = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
    Ok(suite)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    CompileError,
    OverConstrained,
    UnderConstrained,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseStatus {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "result", content = "issues", rename_all = "snake_case")]
pub enum CompileVerdict {
    Compiled,
    Rejected(Vec<String>),
    TimedOut,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceVerdict {
    pub description: String,
    pub valid: bool,
    pub accepted: bool,
    pub walk: WalkOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseOutcome {
    pub category: String,
    pub index: usize,
    pub description: String,
    pub status: CaseStatus,
    pub failures: BTreeSet<FailureKind>,
    pub compile: CompileVerdict,
    /// Empty when the schema did not compile.
    pub instances: Vec<InstanceVerdict>,
}

/// Compiles a case's schema. Normalization errors count as rejections.
fn compile_case(case: &TestCase, engine: &Engine) -> Result<jsonmask::compiler::ConstraintAutomaton, CompileVerdict> {
    let ir = normalize(&case.schema).map_err(|e| CompileVerdict::Rejected(vec![e.to_string()]))?;
    match compile(&ir, &engine.compile) {
        CompileOutcome::Automaton(a) => Ok(a),
        CompileOutcome::Rejected(issues) => Err(CompileVerdict::Rejected(issues.iter().map(|i| i.to_string()).collect())),
        CompileOutcome::TimedOut => Err(CompileVerdict::TimedOut),
    }
}

pub fn run_case(case: &TestCase, engine: &Engine) -> CaseOutcome {
    let mut outcome = CaseOutcome {
        category: case.category.clone(),
        index: case.index,
        description: case.description.clone(),
        status: CaseStatus::Pass,
        failures: BTreeSet::new(),
        compile: CompileVerdict::Compiled,
        instances: Vec::new(),
    };
    match compile_case(case, engine) {
        Err(verdict) => {
            // A compile error is the right answer when nothing is valid.
            if case.tests.iter().any(|t| t.valid) {
                outcome.failures.insert(FailureKind::CompileError);
            }
            outcome.compile = verdict;
        }
        Ok(a) => {
            for t in &case.tests {
                let bytes = to_canonical_string(&t.data);
                let walk = walk_instance(&a, &engine.vocab, &engine.trie, bytes.as_bytes());
                let accepted = walk.accepted();
                if t.valid && !accepted {
                    outcome.failures.insert(FailureKind::OverConstrained);
                }
                if !t.valid && accepted {
                    outcome.failures.insert(FailureKind::UnderConstrained);
                }
                outcome.instances.push(InstanceVerdict { description: t.description.clone(), valid: t.valid, accepted, walk });
            }
        }
    }
    if !outcome.failures.is_empty() {
        outcome.status = CaseStatus::Fail;
    }
    outcome
}

/// Runs every case on `jobs` workers; outcomes come back in suite order.
pub fn run_suite(suite: &Suite, engine: &Engine, jobs: usize) -> Vec<CaseOutcome> {
    let mut outcomes: Vec<CaseOutcome> = crate::pool(jobs).install(|| suite.cases.par_iter().map(|c| run_case(c, engine)).collect());
    outcomes.sort_by(|a, b| (&a.category, a.index).cmp(&(&b.category, b.index)));
    outcomes
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CategoryCoverage {
    pub category: String,
    pub total: usize,
    pub passed: usize,
    pub proportion: f64,
    /// Cases with each failure kind.
    pub failures: BTreeMap<FailureKind, usize>,
}

/// Categories per coverage level. All levels are strict lower bounds
/// except `full`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Thresholds {
    pub minimal: usize,
    pub partial: usize,
    pub moderate: usize,
    pub high: usize,
    pub full: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coverage {
    pub categories: Vec<CategoryCoverage>,
    pub thresholds: Thresholds,
}

pub fn aggregate(outcomes: &[CaseOutcome]) -> Coverage {
    let mut by_cat: BTreeMap<&str, Vec<&CaseOutcome>> = BTreeMap::new();
    for o in outcomes {
        by_cat.entry(&o.category).or_default().push(o);
    }
    let mut thresholds = Thresholds::default();
    let categories = by_cat
        .into_iter()
        .map(|(category, os)| {
            let passed = os.iter().filter(|o| o.status == CaseStatus::Pass).count();
            let mut failures = BTreeMap::new();
            for kind in os.iter().flat_map(|o| &o.failures) {
                *failures.entry(*kind).or_default() += 1;
            }
            // Exact comparisons on counts, not on the rounded proportion.
            let (p, n) = (passed, os.len());
            thresholds.minimal += usize::from(p > 0);
            thresholds.partial += usize::from(4 * p > n);
            thresholds.moderate += usize::from(2 * p > n);
            thresholds.high += usize::from(4 * p > 3 * n);
            thresholds.full += usize::from(p == n);
            CategoryCoverage { category: category.to_string(), total: n, passed: p, proportion: p as f64 / n as f64, failures }
        })
        .collect();
    Coverage { categories, thresholds }
}

/// Categories with at least one case of each failure kind.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FailureBreakdown {
    pub compile_error: usize,
    pub over_constrained: usize,
    pub under_constrained: usize,
}

pub fn failure_breakdown(outcomes: &[CaseOutcome]) -> FailureBreakdown {
    let mut seen: BTreeSet<(&str, FailureKind)> = BTreeSet::new();
    for o in outcomes {
        for k in &o.failures {
            seen.insert((&o.category, *k));
        }
    }
    let count = |k| seen.iter().filter(|(_, x)| *x == k).count();
    FailureBreakdown {
        compile_error: count(FailureKind::CompileError),
        over_constrained: count(FailureKind::OverConstrained),
        under_constrained: count(FailureKind::UnderConstrained),
    }
}

/// Whether the manifest claims the keyword a category is named after.
/// Categories not named after a keyword exercise structure the engine
/// always handles and count as supported.
pub fn category_supported(category: &str, manifest: &KeywordManifest) -> bool {
    let keyword = match category {
        "if-then-else" => "if",
        "defs" | "boolean_schema" | "default" | "content" | "anchor" | "infinite-loop-detection" => return true,
        "dynamicRef" => "$dynamicRef",
        "ref" => "$ref",
        other => other,
    };
    !matches!(manifest.level(keyword), SupportLevel::None)
}

/// A known over-constraint the engine accepts on purpose.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Divergence {
    pub category: String,
    pub case: String,
    pub instance: String,
    pub reason: String,
}

pub fn load_divergences(path: &Path) -> Result<Vec<Divergence>, SuiteError> {
    let bytes = fs::read(path).map_err(|source| SuiteError::Io { path: path.to_path_buf(), source })?;
    serde_json::from_slice(&bytes).map_err(|e| SuiteError::MalformedSuiteFile(path.to_path_buf(), e.to_string()))
}

/// Blocked valid instances that the divergence list does not explain.
pub fn unexplained_over_constraints(outcomes: &[CaseOutcome], divergences: &[Divergence]) -> Vec<String> {
    let mut out = Vec::new();
    for o in outcomes {
        for i in o.instances.iter().filter(|i| i.valid && !i.accepted) {
            let listed = divergences.iter().any(|d| d.category == o.category && d.case == o.description && d.instance == i.description);
            if !listed {
                out.push(format!("{} / {} / {}", o.category, o.description, i.description));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayMismatch {
    pub category: String,
    pub case: String,
    pub instance: String,
    pub detail: String,
}

/// Decodes every valid instance of a case with a source scripted to its
/// tokens and reports any output that differs or does not end with EOS.
pub fn replay_case(case: &TestCase, engine: &Engine) -> Vec<ReplayMismatch> {
    let Ok(a) = compile_case(case, engine) else { return Vec::new() };
    let mut out = Vec::new();
    for t in case.tests.iter().filter(|t| t.valid) {
        let bytes = to_canonical_string(&t.data).into_bytes();
        let miss = |detail: String| ReplayMismatch {
            category: case.category.clone(),
            case: case.description.clone(),
            instance: t.description.clone(),
            detail,
        };
        let tokens = match engine.trie.tokenize(&bytes) {
            Ok(t) => t,
            Err(pos) => {
                out.push(miss(format!("untokenizable at byte {pos}")));
                continue;
            }
        };
        let opts = DecodeOptions { max_tokens: tokens.len() + 1, generation_timeout: Duration::from_secs(40), ..DecodeOptions::default() };
        let mut source = ReplaySource::new(&engine.vocab, tokens);
        match constrained_decode(&a, &mut source, &engine.vocab, &engine.trie, &[], &opts, Duration::ZERO) {
            Ok(r) if r.bytes == bytes && r.terminated_by == Termination::Eos => {}
            Ok(r) => out.push(miss(format!("{:?} after {:?}", r.terminated_by, String::from_utf8_lossy(&r.bytes)))),
            Err(e) => out.push(miss(e.to_string())),
        }
    }
    out
}

/// Machine-readable result of a suite run.
#[derive(Debug, Clone, Serialize)]
pub struct ConformanceReport {
    pub suite_hash: String,
    pub categories: usize,
    pub excluded: Vec<Excluded>,
    pub coverage: Coverage,
    pub breakdown: FailureBreakdown,
    pub cases: Vec<CaseOutcome>,
}

impl ConformanceReport {
    pub fn new(suite: &Suite, outcomes: Vec<CaseOutcome>) -> ConformanceReport {
        ConformanceReport {
            suite_hash: suite.content_hash.clone(),
            categories: suite.categories().len(),
            excluded: suite.excluded.clone(),
            coverage: aggregate(&outcomes),
            breakdown: failure_breakdown(&outcomes),
            cases: outcomes,
        }
    }

    pub fn has_failures(&self) -> bool {
        self.cases.iter().any(|c| c.status == CaseStatus::Fail)
    }
}
