//! Schema to constraint-automaton compilation.
//!
//! [`compile`] lowers a [`SchemaIR`] into a [`ConstraintAutomaton`]; the
//! [`matcher`] module runs it one byte at a time. Compilation is
//! conservative: any keyword occurrence the manifest does not cover, or
//! whose support condition does not hold, rejects the whole schema.

pub mod automaton;
pub mod dfa;
pub mod formats;
mod lower;
pub mod manifest;
pub mod matcher;
pub mod numeric;
mod unsat;

use std::fmt;
use std::time::{Duration, Instant};

use serde::Serialize;

pub use automaton::{ConstraintAutomaton, VId};
pub use manifest::{Condition, KeywordManifest, SupportLevel};
pub use matcher::{AdvanceError, MatcherState, SyntaxMode};
pub use unsat::detect_unsatisfiable;

use crate::schema::SchemaIR;

/// Why a keyword occurrence blocks compilation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", content = "detail", rename_all = "snake_case")]
pub enum IssueKind {
    /// The manifest does not support the keyword.
    Unsupported,
    /// The keyword is partially supported and its condition does not hold here.
    ConditionUnmet(String),
    /// No instance can satisfy the schema.
    Unsatisfiable,
    /// The automaton would exceed a size limit.
    TooComplex,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Issue {
    /// JSON pointer of the keyword inside the schema document.
    pub path: String,
    pub keyword: String,
    pub kind: IssueKind,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match &self.kind {
            IssueKind::Unsupported => write!(f, "{}: unsupported keyword", self.path),
            IssueKind::ConditionUnmet(c) => write!(f, "{}: supported only when {c}", self.path),
            IssueKind::Unsatisfiable => write!(f, "{}: unsatisfiable", self.path),
            IssueKind::TooComplex => write!(f, "{}: too complex", self.path),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CompileOptions {
    pub manifest: KeywordManifest,
    pub compile_timeout: Duration,
    pub max_depth: usize,
    /// Treat `oneOf` as `anyOf` without proving its branches exclusive.
    /// This is unsound and only exists to study under-constraint.
    pub oneof_as_anyof: bool,
}

impl Default for CompileOptions {
    fn default() -> CompileOptions {
        CompileOptions {
            manifest: KeywordManifest::v1(),
            compile_timeout: Duration::from_secs(40),
            max_depth: 64,
            oneof_as_anyof: false,
        }
    }
}

#[derive(Debug, Clone)]
pub enum CompileOutcome {
    Automaton(ConstraintAutomaton),
    Rejected(Vec<Issue>),
    TimedOut,
}

impl CompileOutcome {
    pub fn automaton(self) -> Option<ConstraintAutomaton> {
        match self {
            CompileOutcome::Automaton(a) => Some(a),
            _ => None,
        }
    }
}

/// Whether the manifest and the engine together cover every keyword
/// occurrence; lists every occurrence that is not covered.
pub fn declared_covered(ir: &SchemaIR, manifest: &KeywordManifest) -> (bool, Vec<Issue>) {
    let opts = CompileOptions { manifest: manifest.clone(), compile_timeout: Duration::from_secs(3600), ..CompileOptions::default() };
    match compile(ir, &opts) {
        CompileOutcome::Automaton(_) => (true, Vec::new()),
        CompileOutcome::Rejected(issues) => (false, issues),
        CompileOutcome::TimedOut => {
            let path = ir.node(ir.root).location.clone();
            (false, vec![Issue { path, keyword: "$schema".to_string(), kind: IssueKind::TooComplex }])
        }
    }
}

pub fn compile(ir: &SchemaIR, opts: &CompileOptions) -> CompileOutcome {
    let started = Instant::now();
    let lowerer = lower::Lowerer::new(ir, opts, started + opts.compile_timeout);
    let (root, issues, tables) = match lowerer.run() {
        Ok(parts) => parts,
        Err(lower::Abort::Timeout) => return CompileOutcome::TimedOut,
    };
    if !issues.is_empty() {
        return CompileOutcome::Rejected(issues);
    }
    match tables.finish(root, opts.max_depth, ir.source_id.clone(), started.elapsed()) {
        Some(a) => CompileOutcome::Automaton(a),
        None => {
            let node = ir.node(ir.root);
            let keyword = match node.keywords() {
                None => "false".to_string(),
                Some(k) => k.present().first().map_or("false", |k| k).to_string(),
            };
            let path = if node.keywords().is_some() { format!("{}/{keyword}", node.location) } else { node.location.clone() };
            CompileOutcome::Rejected(vec![Issue { path, keyword, kind: IssueKind::Unsatisfiable }])
        }
    }
}
