//! Lowering of schema nodes into automaton tables.
//!
//! A value position is described by the set of schema nodes that all apply
//! to it. In-place applicators (`$ref`, `allOf`, `anyOf`, `oneOf`) are
//! expanded into a disjunction of branches, each a plain conjunction of
//! nodes; every branch is then lowered by merging its nodes' keywords per
//! JSON type. Value sets are memoized by node set, which is what makes
//! recursive schemas finite.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::time::Instant;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;

use super::automaton::{ArraySpec, Bits, KeyAutomaton, KeyEnd, Leaf, NumberSpec, ObjectSpec, RawKeys, RawTables, StringSpec, VId};
use super::dfa::{Anchoring, Dfa, DfaBuilder, DfaError, DEAD, MAX_DFA_STATES};
use super::formats::format_dfa;
use super::manifest::{Condition, SupportLevel};
use super::numeric;
use super::{CompileOptions, Issue, IssueKind};
use crate::json::{json_equal, Decimal, JsonValue};
use crate::schema::pattern::translate;
use crate::schema::{has_type, JsonType, Keywords, NodeId, NodeKind, SchemaIR, TypeSet, Validator};

/// Most branches one value position may expand into.
const MAX_BRANCHES: usize = 256;
/// Length bounds up to this size are folded into the string automaton.
const FOLD_LENGTH_LIMIT: u64 = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Abort {
    Timeout,
}

enum Work {
    Node(NodeId),
    Choice(NodeId, &'static str, Vec<NodeId>),
}

pub(crate) struct Lowerer<'a> {
    ir: &'a SchemaIR,
    opts: &'a CompileOptions,
    validator: Option<Validator<'a>>,
    deadline: Instant,
    memo: HashMap<(Vec<NodeId>, TypeSet), VId>,
    pending: Vec<bool>,
    tables: RawTables,
    patterns: HashMap<String, Result<Dfa, IssueKind>>,
    oneof_checked: HashMap<NodeId, bool>,
    issues: Vec<Issue>,
    issue_seen: HashSet<(String, String)>,
    nothing: Option<VId>,
}

impl<'a> Lowerer<'a> {
    pub fn new(ir: &'a SchemaIR, opts: &'a CompileOptions, deadline: Instant) -> Lowerer<'a> {
        Lowerer {
            ir,
            opts,
            validator: Validator::new(ir).ok(),
            deadline,
            memo: HashMap::new(),
            pending: Vec::new(),
            tables: RawTables::default(),
            patterns: HashMap::new(),
            oneof_checked: HashMap::new(),
            issues: Vec::new(),
            issue_seen: HashSet::new(),
            nothing: None,
        }
    }

    pub fn run(mut self) -> Result<(VId, Vec<Issue>, RawTables), Abort> {
        self.scan_manifest();
        let root = self.value_for(vec![self.ir.root], TypeSet::all())?;
        let mut issues = self.issues;
        issues.sort();
        Ok((root, issues, self.tables))
    }

    fn issue(&mut self, node: NodeId, keyword: &str, kind: IssueKind) {
        let path = format!("{}/{keyword}", self.ir.node(node).location);
        if self.issue_seen.insert((path.clone(), keyword.to_string())) {
            self.issues.push(Issue { path, keyword: keyword.to_string(), kind });
        }
    }

    /// Checks an engine condition against the manifest and records an issue
    /// when either says no.
    fn require(&mut self, node: NodeId, keyword: &'static str, condition: Condition, holds: bool) {
        if !holds || !self.opts.manifest.allows(keyword, condition) {
            self.issue(node, keyword, IssueKind::ConditionUnmet(condition.as_str().to_string()));
        }
    }

    fn scan_manifest(&mut self) {
        for id in self.ir.reachable() {
            let Some(k) = self.ir.node(id).keywords() else { continue };
            for keyword in k.present() {
                if self.opts.manifest.level(keyword) == &SupportLevel::None {
                    self.issue(id, keyword, IssueKind::Unsupported);
                }
            }
        }
    }

    fn keywords(&self, id: NodeId) -> Option<&'a Keywords> {
        match &self.ir.node(id).kind {
            NodeKind::Keywords(k) => Some(&**k),
            NodeKind::Bool(_) => None,
        }
    }

    fn new_value(&mut self, leaves: Vec<Leaf>) -> VId {
        self.tables.values.push(leaves);
        self.pending.push(false);
        VId(self.tables.values.len() as u32 - 1)
    }

    /// The value that admits nothing.
    fn nothing(&mut self) -> VId {
        if let Some(v) = self.nothing {
            return v;
        }
        let v = self.new_value(Vec::new());
        self.nothing = Some(v);
        v
    }

    /// The value satisfying every node in `nodes`, restricted to `restrict`.
    pub fn value_for(&mut self, mut nodes: Vec<NodeId>, restrict: TypeSet) -> Result<VId, Abort> {
        nodes.retain(|n| !matches!(self.ir.node(*n).kind, NodeKind::Bool(true)));
        nodes.sort();
        nodes.dedup();
        let key = (nodes, restrict);
        if let Some(v) = self.memo.get(&key) {
            return Ok(*v);
        }
        if Instant::now() > self.deadline {
            return Err(Abort::Timeout);
        }
        let v = self.new_value(Vec::new());
        self.pending[v.index()] = true;
        self.memo.insert(key.clone(), v);
        let branches = self.expand(&key.0, restrict)?;
        let mut leaves = Vec::new();
        for branch in branches {
            leaves.extend(self.lower_branch(&branch, restrict)?);
        }
        let leaves = self.merge_leaves(leaves);
        self.tables.values[v.index()] = leaves;
        self.pending[v.index()] = false;
        Ok(v)
    }

    fn expand(&mut self, nodes: &[NodeId], restrict: TypeSet) -> Result<Vec<Vec<NodeId>>, Abort> {
        let mut out = Vec::new();
        let work = nodes.iter().rev().map(|n| Work::Node(*n)).collect();
        self.expand_rec(work, BTreeSet::new(), restrict, &mut out)?;
        Ok(out)
    }

    fn expand_rec(&mut self, mut work: Vec<Work>, mut current: BTreeSet<NodeId>, restrict: TypeSet, out: &mut Vec<Vec<NodeId>>) -> Result<(), Abort> {
        while let Some(item) = work.pop() {
            match item {
                Work::Node(id) => {
                    if current.contains(&id) {
                        continue;
                    }
                    let ir = self.ir;
                    let k = match &ir.node(id).kind {
                        NodeKind::Bool(true) => continue,
                        NodeKind::Bool(false) => return Ok(()),
                        NodeKind::Keywords(k) => k,
                    };
                    current.insert(id);
                    if let Some(alts) = &k.one_of {
                        let context = self.context_types(&current, &work, restrict);
                        self.check_one_of(id, alts, context)?;
                        work.push(Work::Choice(id, "oneOf", alts.clone()));
                    }
                    if let Some(alts) = &k.any_of {
                        work.push(Work::Choice(id, "anyOf", alts.clone()));
                    }
                    for child in k.all_of.iter().flatten().rev() {
                        work.push(Work::Node(*child));
                    }
                    if let Some(target) = k.reference {
                        work.push(Work::Node(target));
                    }
                }
                Work::Choice(id, keyword, alts) => {
                    for alt in alts {
                        if out.len() >= MAX_BRANCHES {
                            self.issue(id, keyword, IssueKind::TooComplex);
                            return Ok(());
                        }
                        let mut forked: Vec<Work> = work.iter().map(clone_work).collect();
                        forked.push(Work::Node(alt));
                        self.expand_rec(forked, current.clone(), restrict, out)?;
                    }
                    return Ok(());
                }
            }
        }
        if out.len() >= MAX_BRANCHES {
            return Ok(());
        }
        out.push(current.into_iter().collect());
        Ok(())
    }

    /// Types allowed by the nodes already known to apply.
    fn context_types(&self, current: &BTreeSet<NodeId>, work: &[Work], restrict: TypeSet) -> TypeSet {
        let mut types = restrict;
        let pending = work.iter().filter_map(|w| match w {
            Work::Node(n) => Some(*n),
            Work::Choice(..) => None,
        });
        for id in current.iter().copied().chain(pending) {
            if let Some(t) = self.keywords(id).and_then(|k| k.types) {
                types = types.intersect(t);
            }
        }
        types
    }

    /// `oneOf` is only compiled when its branches are pairwise exclusive,
    /// so that it means the same as `anyOf`.
    fn check_one_of(&mut self, id: NodeId, alts: &[NodeId], context: TypeSet) -> Result<(), Abort> {
        if self.opts.oneof_as_anyof {
            return Ok(());
        }
        if let Some(&ok) = self.oneof_checked.get(&id) {
            if !ok {
                self.require(id, "oneOf", Condition::DisjointBranches, false);
            }
            return Ok(());
        }
        self.oneof_checked.insert(id, false);
        let mut values = Vec::new();
        for alt in alts {
            values.push(self.value_for(vec![*alt], context)?);
        }
        let mut disjoint = true;
        'outer: for i in 0..values.len() {
            for j in i + 1..values.len() {
                if !self.values_disjoint(values[i], values[j], 0) {
                    disjoint = false;
                    break 'outer;
                }
            }
        }
        self.oneof_checked.insert(id, disjoint);
        self.require(id, "oneOf", Condition::DisjointBranches, disjoint);
        Ok(())
    }

    /// Sound test that no instance satisfies both values.
    fn values_disjoint(&self, a: VId, b: VId, depth: usize) -> bool {
        if depth > 16 || self.pending[a.index()] || self.pending[b.index()] {
            return false;
        }
        let la = &self.tables.values[a.index()];
        let lb = &self.tables.values[b.index()];
        la.iter().all(|x| lb.iter().all(|y| self.leaves_disjoint(*x, *y, depth)))
    }

    fn leaves_disjoint(&self, a: Leaf, b: Leaf, depth: usize) -> bool {
        match (a, b) {
            (Leaf::Null, Leaf::Null) | (Leaf::True, Leaf::True) | (Leaf::False, Leaf::False) => false,
            (Leaf::Number(x), Leaf::Number(y)) => {
                // Every number automaton accepts the plain spelling of each
                // value it accepts, so an empty product means no shared value.
                let (x, y) = (&self.tables.numbers[x as usize], &self.tables.numbers[y as usize]);
                x.dfa.intersect(&y.dfa).is_ok_and(|d| d.is_empty())
            }
            (Leaf::String(x), Leaf::String(y)) => {
                let (x, y) = (&self.tables.strings[x as usize], &self.tables.strings[y as usize]);
                if !(x.exact && y.exact) {
                    return false;
                }
                let lengths_apart = x.max_len.is_some_and(|m| m < y.min_len) || y.max_len.is_some_and(|m| m < x.min_len);
                lengths_apart || x.dfa.intersect(&y.dfa).is_ok_and(|d| d.is_empty())
            }
            (Leaf::Array(x), Leaf::Array(y)) => {
                let (x, y) = (&self.tables.arrays[x as usize], &self.tables.arrays[y as usize]);
                if x.max.is_some_and(|m| m < y.min) || y.max.is_some_and(|m| m < x.min) {
                    return true;
                }
                (0..x.min.min(y.min).min(64)).any(|i| self.values_disjoint(x.element(i), y.element(i), depth + 1))
            }
            (Leaf::Object(x), Leaf::Object(y)) => {
                let (x, _) = &self.tables.objects[x as usize];
                let (y, _) = &self.tables.objects[y as usize];
                x.required.iter().any(|i| {
                    let name = &x.names[i];
                    let Some(j) = y.names.iter().position(|n| n == name) else { return false };
                    if !y.required.get(j) {
                        return false;
                    }
                    match (x.name_values[i], y.name_values[j]) {
                        (Some(a), Some(b)) => self.values_disjoint(a, b, depth + 1),
                        _ => true,
                    }
                })
            }
            _ => true,
        }
    }

    /// Unions same-kind leaves where that loses nothing, so fewer matcher
    /// threads are needed.
    fn merge_leaves(&mut self, leaves: Vec<Leaf>) -> Vec<Leaf> {
        let mut out: Vec<Leaf> = Vec::new();
        let mut number: Option<u32> = None;
        let mut string: Option<u32> = None;
        for leaf in leaves {
            match leaf {
                Leaf::Number(n) => match number {
                    None => number = Some(n),
                    Some(m) => match self.tables.numbers[m as usize].dfa.union(&self.tables.numbers[n as usize].dfa) {
                        Ok(dfa) => {
                            self.tables.numbers.push(NumberSpec { dfa });
                            number = Some(self.tables.numbers.len() as u32 - 1);
                        }
                        Err(_) => out.push(leaf),
                    },
                },
                Leaf::String(s) if !self.tables.strings[s as usize].counted => match string {
                    None => string = Some(s),
                    Some(t) => {
                        let (a, b) = (&self.tables.strings[t as usize], &self.tables.strings[s as usize]);
                        match a.dfa.union(&b.dfa) {
                            Ok(dfa) => {
                                let exact = a.exact && b.exact;
                                string = Some(self.push_string(dfa, 0, None, exact));
                            }
                            Err(_) => out.push(leaf),
                        }
                    }
                },
                other => {
                    if !out.contains(&other) {
                        out.push(other);
                    }
                }
            }
        }
        if let Some(n) = number {
            out.push(Leaf::Number(n));
        }
        if let Some(s) = string {
            out.push(Leaf::String(s));
        }
        out.sort();
        out
    }

    fn push_string(&mut self, dfa: Dfa, min_len: u64, max_len: Option<u64>, exact: bool) -> u32 {
        self.push_string_spec(dfa, min_len, max_len, false, exact)
    }

    fn push_string_spec(&mut self, dfa: Dfa, min_len: u64, max_len: Option<u64>, counted: bool, exact: bool) -> u32 {
        let (min_left, max_left) = if counted { (dfa.min_chars_to_accept(), dfa.max_chars_to_accept()) } else { (Vec::new(), Vec::new()) };
        self.tables.strings.push(StringSpec { dfa, min_len, max_len, counted, exact, min_left, max_left });
        self.tables.strings.len() as u32 - 1
    }

    fn lower_branch(&mut self, nodes: &[NodeId], restrict: TypeSet) -> Result<Vec<Leaf>, Abort> {
        let kws: Vec<(NodeId, &'a Keywords)> = nodes.iter().filter_map(|n| self.keywords(*n).map(|k| (*n, k))).collect();
        let mut types = restrict;
        for (_, k) in &kws {
            if let Some(t) = k.types {
                types = types.intersect(t);
            }
        }
        if types.is_empty() {
            return Ok(Vec::new());
        }
        let mut set: Option<Vec<&JsonValue>> = None;
        for (_, k) in &kws {
            let listed: Vec<&JsonValue> = match (&k.const_value, &k.enum_values) {
                (Some(c), _) => vec![c],
                (None, Some(values)) => values.iter().collect(),
                (None, None) => continue,
            };
            set = Some(match set {
                None => listed,
                Some(prev) => prev.into_iter().filter(|v| listed.iter().any(|w| json_equal(v, w))).collect(),
            });
            // const and enum on the same node both apply.
            if let (Some(_), Some(values)) = (&k.const_value, &k.enum_values) {
                set = set.map(|s| s.into_iter().filter(|v| values.iter().any(|w| json_equal(v, w))).collect());
            }
        }
        if let Some(values) = set {
            let mut kept: Vec<JsonValue> = Vec::new();
            for v in values {
                let typed = types.iter().any(|t| has_type(v, t));
                let local = match &self.validator {
                    Some(val) => kws.iter().all(|(id, _)| val.is_valid_local(*id, v)),
                    None => true,
                };
                if typed && local && !kept.iter().any(|w| json_equal(w, v)) {
                    kept.push(v.clone());
                }
            }
            return Ok(self.literal_leaves(&kept));
        }
        let mut leaves = Vec::new();
        if types.contains(JsonType::Null) {
            leaves.push(Leaf::Null);
        }
        if types.contains(JsonType::Boolean) {
            leaves.push(Leaf::True);
            leaves.push(Leaf::False);
        }
        if let Some(integer_only) = types.number_kind() {
            leaves.push(self.number_leaf(&kws, integer_only));
        }
        if types.contains(JsonType::String) {
            leaves.push(self.string_leaf(&kws));
        }
        if types.contains(JsonType::Array) {
            leaves.push(self.array_leaf(&kws)?);
        }
        if types.contains(JsonType::Object) {
            leaves.push(self.object_leaf(&kws)?);
        }
        Ok(leaves)
    }

    fn literal_leaves(&mut self, values: &[JsonValue]) -> Vec<Leaf> {
        let mut leaves = Vec::new();
        let mut numbers = Vec::new();
        let mut strings: Vec<&[u8]> = Vec::new();
        for v in values {
            match v {
                JsonValue::Null => leaves.push(Leaf::Null),
                JsonValue::Bool(true) => leaves.push(Leaf::True),
                JsonValue::Bool(false) => leaves.push(Leaf::False),
                JsonValue::Number(n) => numbers.extend(Decimal::from_number(n)),
                JsonValue::String(s) => strings.push(s.as_bytes()),
                JsonValue::Array(items) => {
                    let positions = items.iter().map(|item| self.literal_value(item)).collect();
                    let rest = self.nothing();
                    let len = items.len() as u64;
                    self.tables.arrays.push(ArraySpec { positions, rest, min: len, max: Some(len) });
                    leaves.push(Leaf::Array(self.tables.arrays.len() as u32 - 1));
                }
                JsonValue::Object(map) => {
                    let names: Vec<String> = map.keys().cloned().collect();
                    let name_values = map.values().map(|item| Some(self.literal_value(item))).collect();
                    let mut required = Bits::new(names.len());
                    for i in 0..names.len() {
                        required.set(i);
                    }
                    let raw = name_trie_keys(&names);
                    let len = names.len() as u64;
                    let spec = ObjectSpec {
                        names,
                        name_values,
                        required,
                        dependent: Vec::new(),
                        keys: empty_keys(),
                        min: len,
                        max: Some(len),
                    };
                    self.tables.objects.push((spec, raw));
                    leaves.push(Leaf::Object(self.tables.objects.len() as u32 - 1));
                }
            }
        }
        if !numbers.is_empty() {
            // Values too wide to spell positionally are dropped, which only
            // over-constrains.
            let dfa = numeric::literal_numbers(&numbers).unwrap_or_else(|_| Dfa::empty());
            self.tables.numbers.push(NumberSpec { dfa });
            leaves.push(Leaf::Number(self.tables.numbers.len() as u32 - 1));
        }
        if !strings.is_empty() {
            let dfa = Dfa::literals(strings);
            leaves.push(Leaf::String(self.push_string(dfa, 0, None, true)));
        }
        leaves.sort();
        leaves.dedup();
        leaves
    }

    fn literal_value(&mut self, value: &JsonValue) -> VId {
        let leaves = self.literal_leaves(std::slice::from_ref(value));
        self.new_value(leaves)
    }

    fn number_leaf(&mut self, kws: &[(NodeId, &'a Keywords)], integer_only: bool) -> Leaf {
        let mut occurrences: Vec<(NodeId, &'static str)> = Vec::new();
        for (id, k) in kws {
            let present = [
                (k.minimum.is_some(), "minimum"),
                (k.maximum.is_some(), "maximum"),
                (k.exclusive_minimum.is_some(), "exclusiveMinimum"),
                (k.exclusive_maximum.is_some(), "exclusiveMaximum"),
                (k.multiple_of.is_some(), "multipleOf"),
            ];
            occurrences.extend(present.iter().filter(|(p, _)| *p).map(|(_, name)| (*id, *name)));
        }
        let grammar = if integer_only { numeric::json_integer() } else { numeric::json_number() };
        for (id, keyword) in &occurrences {
            self.require(*id, keyword, Condition::IntegerOnly, integer_only);
        }
        if occurrences.is_empty() || !integer_only {
            return self.push_number(grammar);
        }
        let mut lo: Option<BigInt> = None;
        let mut hi: Option<BigInt> = None;
        let mut modulus = BigInt::one();
        let mut too_wide = Vec::new();
        for (id, k) in kws {
            let bounds = [
                (&k.minimum, "minimum", false, false),
                (&k.exclusive_minimum, "exclusiveMinimum", false, true),
                (&k.maximum, "maximum", true, false),
                (&k.exclusive_maximum, "exclusiveMaximum", true, true),
            ];
            for (value, keyword, upper, exclusive) in bounds {
                let Some(d) = value else { continue };
                let bound = match (upper, exclusive) {
                    (false, false) => d.ceil(),
                    (false, true) => d.floor().map(|f| f + 1),
                    (true, false) => d.floor(),
                    (true, true) => d.ceil().map(|c| c - 1),
                };
                let Some(b) = bound else {
                    too_wide.push((*id, keyword));
                    continue;
                };
                if upper {
                    hi = Some(hi.map_or(b.clone(), |h| h.min(b)));
                } else {
                    lo = Some(lo.map_or(b.clone(), |l| l.max(b)));
                }
            }
            if let Some(m) = &k.multiple_of {
                match m.reduced_numerator() {
                    Some(p) if !p.is_one() => modulus = modulus.lcm(&p),
                    Some(_) => {}
                    None => too_wide.push((*id, "multipleOf")),
                }
            }
        }
        for (id, keyword) in too_wide {
            self.issue(id, keyword, IssueKind::TooComplex);
        }
        let mut dfa = match numeric::integer_range(lo.as_ref(), hi.as_ref()) {
            Ok(d) => d,
            Err(_) => {
                let (id, keyword) = occurrences[0];
                self.issue(id, keyword, IssueKind::TooComplex);
                grammar
            }
        };
        if !modulus.is_one() {
            match numeric::multiples_of(&modulus).and_then(|m| dfa.intersect(&m)) {
                Ok(d) => dfa = d,
                Err(_) => {
                    let id = kws.iter().find(|(_, k)| k.multiple_of.is_some()).map(|(id, _)| *id).unwrap_or(occurrences[0].0);
                    self.issue(id, "multipleOf", IssueKind::TooComplex);
                }
            }
        }
        self.push_number(dfa)
    }

    fn push_number(&mut self, dfa: Dfa) -> Leaf {
        self.tables.numbers.push(NumberSpec { dfa });
        Leaf::Number(self.tables.numbers.len() as u32 - 1)
    }

    fn pattern_dfa(&mut self, pattern: &str) -> Result<Dfa, IssueKind> {
        if let Some(r) = self.patterns.get(pattern) {
            return r.clone();
        }
        let result = match translate(pattern) {
            Err(_) => Err(IssueKind::ConditionUnmet(Condition::Translatable.as_str().to_string())),
            Ok(t) => match Dfa::from_regex(&t, Anchoring::Search) {
                Ok(d) => Ok(d),
                Err(DfaError::TooLarge(_)) => Err(IssueKind::TooComplex),
                Err(_) => Err(IssueKind::ConditionUnmet(Condition::Translatable.as_str().to_string())),
            },
        };
        self.patterns.insert(pattern.to_string(), result.clone());
        result
    }

    /// The pattern automaton, or `None` after recording why it is unusable.
    fn usable_pattern(&mut self, id: NodeId, keyword: &'static str, pattern: &str) -> Option<Dfa> {
        match self.pattern_dfa(pattern) {
            Ok(d) => {
                self.require(id, keyword, Condition::Translatable, true);
                Some(d)
            }
            Err(IssueKind::ConditionUnmet(_)) => {
                self.require(id, keyword, Condition::Translatable, false);
                None
            }
            Err(kind) => {
                self.issue(id, keyword, kind);
                None
            }
        }
    }

    fn string_leaf(&mut self, kws: &[(NodeId, &'a Keywords)]) -> Leaf {
        let mut dfa: Option<Dfa> = None;
        let mut exact = true;
        let mut min_len = 0u64;
        let mut max_len: Option<u64> = None;
        for (id, k) in kws {
            let mut parts = Vec::new();
            if let Some(p) = &k.pattern {
                if let Some(d) = self.usable_pattern(*id, "pattern", p) {
                    parts.push((d, "pattern"));
                }
            }
            if let Some(f) = &k.format {
                match format_dfa(f) {
                    None => {}
                    Some(Ok((d, is_exact))) => {
                        exact &= is_exact;
                        parts.push((d, "format"));
                    }
                    Some(Err(_)) => self.issue(*id, "format", IssueKind::TooComplex),
                }
            }
            for (d, keyword) in parts {
                dfa = match dfa {
                    None => Some(d),
                    Some(prev) => match prev.intersect(&d) {
                        Ok(x) => Some(x),
                        Err(_) => {
                            self.issue(*id, keyword, IssueKind::TooComplex);
                            Some(prev)
                        }
                    },
                };
            }
            if let Some(m) = k.min_length {
                min_len = min_len.max(m);
            }
            if let Some(m) = k.max_length {
                max_len = Some(max_len.map_or(m, |x| x.min(m)));
            }
        }
        let base = dfa.unwrap_or_else(Dfa::any_string);
        if min_len == 0 && max_len.is_none() {
            return Leaf::String(self.push_string(base, 0, None, exact));
        }
        if max_len.is_some_and(|m| m < min_len) {
            return Leaf::String(self.push_string(Dfa::empty(), min_len, max_len, exact));
        }
        if max_len.unwrap_or(min_len) <= FOLD_LENGTH_LIMIT {
            let regex = match max_len {
                Some(m) => format!("(?s:.){{{min_len},{m}}}"),
                None => format!("(?s:.){{{min_len},}}"),
            };
            if let Ok(folded) = Dfa::from_regex(&regex, Anchoring::Full).and_then(|l| base.intersect(&l)) {
                return Leaf::String(self.push_string(folded, min_len, max_len, exact));
            }
        }
        Leaf::String(self.push_string_spec(base, min_len, max_len, true, exact))
    }

    fn array_leaf(&mut self, kws: &[(NodeId, &'a Keywords)]) -> Result<Leaf, Abort> {
        let mut min = 0u64;
        let mut max: Option<u64> = None;
        let mut prefix_len = 0usize;
        for (_, k) in kws {
            if let Some(m) = k.min_items {
                min = min.max(m);
            }
            if let Some(m) = k.max_items {
                max = Some(max.map_or(m, |x| x.min(m)));
            }
            prefix_len = prefix_len.max(k.prefix_items.as_ref().map_or(0, Vec::len));
        }
        if let Some(m) = max {
            prefix_len = prefix_len.min(usize::try_from(m).unwrap_or(usize::MAX));
        }
        let mut positions = Vec::with_capacity(prefix_len);
        for i in 0..prefix_len {
            let constraints: Vec<NodeId> = kws
                .iter()
                .filter_map(|(_, k)| match &k.prefix_items {
                    Some(p) if i < p.len() => Some(p[i]),
                    _ => k.items,
                })
                .collect();
            positions.push(self.value_for(constraints, TypeSet::all())?);
        }
        let rest_constraints: Vec<NodeId> = kws.iter().filter_map(|(_, k)| k.items).collect();
        let rest = self.value_for(rest_constraints, TypeSet::all())?;
        self.tables.arrays.push(ArraySpec { positions, rest, min, max });
        Ok(Leaf::Array(self.tables.arrays.len() as u32 - 1))
    }

    /// The string language of a `propertyNames` subschema, or `None` when it
    /// cannot be expressed as a single automaton.
    fn property_name_language(&mut self, node: NodeId) -> Result<Option<Dfa>, Abort> {
        let v = self.value_for(vec![node], [JsonType::String].into_iter().collect())?;
        if self.pending[v.index()] {
            return Ok(None);
        }
        let mut out = Dfa::empty();
        for leaf in self.tables.values[v.index()].clone() {
            let Leaf::String(s) = leaf else { continue };
            let spec = &self.tables.strings[s as usize];
            if spec.counted {
                return Ok(None);
            }
            match out.union(&spec.dfa) {
                Ok(d) => out = d,
                Err(_) => return Ok(None),
            }
        }
        Ok(Some(out))
    }

    fn object_leaf(&mut self, kws: &[(NodeId, &'a Keywords)]) -> Result<Leaf, Abort> {
        let mut names: Vec<String> = Vec::new();
        let add = |names: &mut Vec<String>, n: &str| {
            if !names.iter().any(|x| x == n) {
                names.push(n.to_string());
            }
        };
        for (_, k) in kws {
            for (n, _) in &k.properties {
                add(&mut names, n);
            }
            for n in &k.required {
                add(&mut names, n);
            }
            for (n, deps) in &k.dependent_required {
                add(&mut names, n);
                for d in deps {
                    add(&mut names, d);
                }
            }
        }
        // Every pattern of every node, with the node it belongs to.
        let mut patterns: Vec<(usize, Dfa, NodeId)> = Vec::new();
        for (i, (id, k)) in kws.iter().enumerate() {
            for (p, child) in &k.pattern_properties {
                if let Some(d) = self.usable_pattern(*id, "patternProperties", p) {
                    patterns.push((i, d, *child));
                }
            }
        }
        let mut key_language = Dfa::any_string();
        for (id, k) in kws {
            let Some(pn) = k.property_names else { continue };
            match self.property_name_language(pn)? {
                Some(d) => {
                    self.require(*id, "propertyNames", Condition::StringConstraints, true);
                    match key_language.intersect(&d) {
                        Ok(x) => key_language = x,
                        Err(_) => self.issue(*id, "propertyNames", IssueKind::TooComplex),
                    }
                }
                None => self.require(*id, "propertyNames", Condition::StringConstraints, false),
            }
        }

        let mut name_values = Vec::with_capacity(names.len());
        for name in &names {
            if !key_language.matches(name.as_bytes()) {
                name_values.push(None);
                continue;
            }
            let mut constraints = Vec::new();
            for (i, (_, k)) in kws.iter().enumerate() {
                let before = constraints.len();
                // A named property still answers to every pattern it matches.
                if let Some((_, child)) = k.properties.iter().find(|(n, _)| n == name) {
                    constraints.push(*child);
                }
                for (owner, d, child) in &patterns {
                    if *owner == i && d.matches(name.as_bytes()) {
                        constraints.push(*child);
                    }
                }
                if constraints.len() == before {
                    constraints.extend(k.additional_properties);
                }
            }
            name_values.push(Some(self.value_for(constraints, TypeSet::all())?));
        }

        let index = |n: &str| names.iter().position(|x| x == n).expect("name collected above") as u32;
        let mut required = Bits::new(names.len());
        let mut dependent: Vec<(u32, Bits)> = Vec::new();
        let mut min = 0u64;
        let mut max: Option<u64> = None;
        for (_, k) in kws {
            for n in &k.required {
                required.set(index(n) as usize);
            }
            for (n, deps) in &k.dependent_required {
                let mut bits = Bits::new(names.len());
                for d in deps {
                    bits.set(index(d) as usize);
                }
                dependent.push((index(n), bits));
            }
            if let Some(m) = k.min_properties {
                min = min.max(m);
            }
            if let Some(m) = k.max_properties {
                max = Some(max.map_or(m, |x| x.min(m)));
            }
        }

        let raw = match self.key_product(kws, &names, &patterns, &key_language)? {
            Some(raw) => raw,
            None => {
                let id = kws.first().map_or(self.ir.root, |(id, _)| *id);
                let keyword = if patterns.is_empty() { "properties" } else { "patternProperties" };
                self.issue(id, keyword, IssueKind::TooComplex);
                name_trie_keys(&names)
            }
        };
        let spec = ObjectSpec { names, name_values, required, dependent, keys: empty_keys(), min, max };
        self.tables.objects.push((spec, raw));
        Ok(Leaf::Object(self.tables.objects.len() as u32 - 1))
    }

    /// Product of the name trie, every pattern and the key language.
    /// `None` when it grows past the state limit.
    fn key_product(&mut self, kws: &[(NodeId, &'a Keywords)], names: &[String], patterns: &[(usize, Dfa, NodeId)], language: &Dfa) -> Result<Option<RawKeys>, Abort> {
        if language.is_empty() {
            return Ok(Some(RawKeys { trans: vec![DEAD; 256], ends: vec![KeyEnd::Reject] }));
        }
        let (trie, trie_ends) = name_trie(names);
        type State = (u32, Vec<u32>, u32);
        let start: State = (trie.start(), patterns.iter().map(|(_, d, _)| d.start()).collect(), language.start());
        let mut ids: HashMap<State, u32> = HashMap::new();
        let mut states: Vec<State> = vec![start.clone()];
        ids.insert(start, 0);
        let mut trans: Vec<u32> = Vec::new();
        let mut i = 0;
        while i < states.len() {
            if ids.len() > MAX_DFA_STATES {
                return Ok(None);
            }
            let (t, ps, l) = states[i].clone();
            trans.extend(std::iter::repeat_n(DEAD, 256));
            for byte in 0..=255u8 {
                let nl = language.next(l, byte);
                if nl == DEAD {
                    continue;
                }
                let nt = if t == DEAD { DEAD } else { trie.next(t, byte) };
                let nps: Vec<u32> = ps.iter().zip(patterns).map(|(&s, (_, d, _))| if s == DEAD { DEAD } else { d.next(s, byte) }).collect();
                let next: State = (nt, nps, nl);
                let id = match ids.get(&next) {
                    Some(id) => *id,
                    None => {
                        let id = states.len() as u32;
                        ids.insert(next.clone(), id);
                        states.push(next);
                        id
                    }
                };
                trans[i * 256 + byte as usize] = id;
            }
            i += 1;
        }
        let mut ends = Vec::with_capacity(states.len());
        for (t, ps, l) in &states {
            if !language.is_accepting(*l) {
                ends.push(KeyEnd::Reject);
                continue;
            }
            if *t != DEAD {
                if let Some(n) = trie_ends[*t as usize] {
                    ends.push(KeyEnd::Name(n));
                    continue;
                }
            }
            let mut constraints = Vec::new();
            for (i, (_, k)) in kws.iter().enumerate() {
                let before = constraints.len();
                for ((owner, d, child), s) in patterns.iter().zip(ps) {
                    if *owner == i && *s != DEAD && d.is_accepting(*s) {
                        constraints.push(*child);
                    }
                }
                if constraints.len() == before {
                    constraints.extend(k.additional_properties);
                }
            }
            ends.push(KeyEnd::Other(self.value_for(constraints, TypeSet::all())?));
        }
        Ok(Some(RawKeys { trans, ends }))
    }
}

fn clone_work(w: &Work) -> Work {
    match w {
        Work::Node(n) => Work::Node(*n),
        Work::Choice(id, k, alts) => Work::Choice(*id, k, alts.clone()),
    }
}

fn empty_keys() -> KeyAutomaton {
    KeyAutomaton { trans: Vec::new(), ends: Vec::new(), reach_names: Vec::new(), reach_other: Vec::new() }
}

/// A trie over the names; the second vector maps states to the name
/// ending there.
fn name_trie(names: &[String]) -> (Dfa, Vec<Option<u32>>) {
    let mut b = DfaBuilder::new();
    let root = b.add_state(false);
    let mut ends = vec![None];
    for (i, name) in names.iter().enumerate() {
        let mut s = root;
        for &byte in name.as_bytes() {
            let t = b.get(s, byte);
            s = if t == DEAD {
                let t = b.add_state(false);
                ends.push(None);
                b.set(s, byte, t);
                t
            } else {
                t
            };
        }
        b.set_accept(s, true);
        ends[s as usize] = Some(i as u32);
    }
    (b.finish(root), ends)
}

/// Key automaton that admits exactly the names.
fn name_trie_keys(names: &[String]) -> RawKeys {
    let (trie, ends) = name_trie(names);
    let mut trans = vec![DEAD; ends.len() * 256];
    for s in 0..ends.len() {
        for b in 0..=255u8 {
            trans[s * 256 + b as usize] = trie.next(s as u32, b);
        }
    }
    let ends = ends.into_iter().map(|e| e.map_or(KeyEnd::Reject, KeyEnd::Name)).collect();
    RawKeys { trans, ends }
}
