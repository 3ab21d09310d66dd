//! Byte-level DFAs built from regular expressions.
//!
//! Patterns are parsed with `regex-syntax`, lowered to a Thompson NFA over
//! UTF-8 bytes and determinized. Every automaton produced here only accepts
//! well-formed UTF-8, which the string matcher relies on.

use std::collections::{HashMap, VecDeque};

use regex_syntax::hir::{Class, Hir, HirKind, Look};
use regex_syntax::utf8::Utf8Sequences;

pub const DEAD: u32 = u32::MAX;
/// Distance value meaning "unbounded".
pub const INFINITE: u32 = u32::MAX;

const MAX_NFA_STATES: usize = 400_000;
pub const MAX_DFA_STATES: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DfaError {
    #[error("regex syntax: {0}")]
    Syntax(String),
    #[error("unsupported regex construct: {0}")]
    Unsupported(&'static str),
    #[error("automaton exceeds {0} states")]
    TooLarge(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dfa {
    trans: Vec<u32>,
    accept: Vec<bool>,
    start: u32,
}

/// How a regex is matched against a whole string.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchoring {
    /// The whole string must match.
    Full,
    /// Some substring must match, unless `^`/`$` pin it.
    Search,
}

impl Dfa {
    pub fn empty() -> Dfa {
        Dfa { trans: Vec::new(), accept: Vec::new(), start: DEAD }
    }

    pub fn start(&self) -> u32 {
        self.start
    }

    pub fn len(&self) -> usize {
        self.accept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.start == DEAD
    }

    #[inline]
    pub fn next(&self, state: u32, byte: u8) -> u32 {
        self.trans[state as usize * 256 + byte as usize]
    }

    #[inline]
    pub fn is_accepting(&self, state: u32) -> bool {
        self.accept[state as usize]
    }

    /// Runs the DFA over `bytes` from the start state.
    pub fn run(&self, bytes: &[u8]) -> Option<u32> {
        let mut s = self.start;
        for &b in bytes {
            if s == DEAD {
                return None;
            }
            s = self.next(s, b);
        }
        (s != DEAD).then_some(s)
    }

    pub fn matches(&self, bytes: &[u8]) -> bool {
        self.run(bytes).is_some_and(|s| self.is_accepting(s))
    }

    /// Parses an already translated (regex crate syntax) pattern.
    pub fn from_regex(pattern: &str, anchoring: Anchoring) -> Result<Dfa, DfaError> {
        let hir = regex_syntax::ParserBuilder::new()
            .utf8(true)
            .unicode(true)
            .build()
            .parse(pattern)
            .map_err(|e| DfaError::Syntax(e.to_string()))?;
        let mut nfa = Nfa::default();
        let matched = nfa.add(NState::Match)?;
        let mut entries = Vec::new();
        let pieces = match anchoring {
            Anchoring::Full => vec![(true, hir, true)],
            Anchoring::Search => split_anchors(hir),
        };
        for (start_anchored, body, end_anchored) in pieces {
            let mut next = matched;
            if !end_anchored {
                next = nfa.any_star(next)?;
            }
            next = nfa.compile(&body, next)?;
            if !start_anchored {
                next = nfa.any_star(next)?;
            }
            entries.push(next);
        }
        let start = if entries.len() == 1 { entries[0] } else { nfa.add(NState::Split(entries))? };
        Ok(nfa.determinize(start)?.trim())
    }

    /// The set of all well-formed UTF-8 strings.
    pub fn any_string() -> Dfa {
        Dfa::from_regex("(?s:.)*", Anchoring::Full).expect("static regex")
    }

    /// Exactly the given byte strings, which must be valid UTF-8.
    pub fn literals<'a>(items: impl IntoIterator<Item = &'a [u8]>) -> Dfa {
        let mut b = DfaBuilder::new();
        let root = b.add_state(false);
        for item in items {
            let mut s = root;
            for &byte in item {
                let t = b.get(s, byte);
                s = if t == DEAD {
                    let n = b.add_state(false);
                    b.set(s, byte, n);
                    n
                } else {
                    t
                };
            }
            b.set_accept(s, true);
        }
        b.finish(root).trim()
    }

    /// Product automaton accepting the intersection of both languages.
    pub fn intersect(&self, other: &Dfa) -> Result<Dfa, DfaError> {
        if self.is_empty() || other.is_empty() {
            return Ok(Dfa::empty());
        }
        let mut b = DfaBuilder::new();
        let mut ids: HashMap<(u32, u32), u32> = HashMap::new();
        let mut queue = VecDeque::new();
        let start = (self.start, other.start);
        ids.insert(start, b.add_state(self.is_accepting(start.0) && other.is_accepting(start.1)));
        queue.push_back(start);
        while let Some((x, y)) = queue.pop_front() {
            let id = ids[&(x, y)];
            for byte in 0..=255u8 {
                let (nx, ny) = (self.next(x, byte), other.next(y, byte));
                if nx == DEAD || ny == DEAD {
                    continue;
                }
                let target = match ids.get(&(nx, ny)) {
                    Some(t) => *t,
                    None => {
                        if ids.len() >= MAX_DFA_STATES {
                            return Err(DfaError::TooLarge(MAX_DFA_STATES));
                        }
                        let t = b.add_state(self.is_accepting(nx) && other.is_accepting(ny));
                        ids.insert((nx, ny), t);
                        queue.push_back((nx, ny));
                        t
                    }
                };
                b.set(id, byte, target);
            }
        }
        Ok(b.finish(0).trim())
    }

    /// Product automaton accepting the union of both languages.
    pub fn union(&self, other: &Dfa) -> Result<Dfa, DfaError> {
        if self.is_empty() {
            return Ok(other.clone());
        }
        if other.is_empty() {
            return Ok(self.clone());
        }
        let acc = |d: &Dfa, s: u32| s != DEAD && d.is_accepting(s);
        let mut b = DfaBuilder::new();
        let mut ids: HashMap<(u32, u32), u32> = HashMap::new();
        let mut queue = VecDeque::new();
        let start = (self.start, other.start);
        ids.insert(start, b.add_state(acc(self, start.0) || acc(other, start.1)));
        queue.push_back(start);
        while let Some((x, y)) = queue.pop_front() {
            let id = ids[&(x, y)];
            for byte in 0..=255u8 {
                let nx = if x == DEAD { DEAD } else { self.next(x, byte) };
                let ny = if y == DEAD { DEAD } else { other.next(y, byte) };
                if nx == DEAD && ny == DEAD {
                    continue;
                }
                let target = match ids.get(&(nx, ny)) {
                    Some(t) => *t,
                    None => {
                        if ids.len() >= MAX_DFA_STATES {
                            return Err(DfaError::TooLarge(MAX_DFA_STATES));
                        }
                        let t = b.add_state(acc(self, nx) || acc(other, ny));
                        ids.insert((nx, ny), t);
                        queue.push_back((nx, ny));
                        t
                    }
                };
                b.set(id, byte, target);
            }
        }
        Ok(b.finish(0).trim())
    }

    /// Whether both automata accept exactly the same strings.
    pub fn same_language(&self, other: &Dfa) -> bool {
        if self.is_empty() || other.is_empty() {
            return self.is_empty() == other.is_empty();
        }
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![(self.start, other.start)];
        while let Some((x, y)) = stack.pop() {
            if !seen.insert((x, y)) {
                continue;
            }
            let ax = x != DEAD && self.is_accepting(x);
            let ay = y != DEAD && other.is_accepting(y);
            if ax != ay {
                return false;
            }
            for byte in 0..=255u8 {
                let nx = if x == DEAD { DEAD } else { self.next(x, byte) };
                let ny = if y == DEAD { DEAD } else { other.next(y, byte) };
                if nx != DEAD || ny != DEAD {
                    stack.push((nx, ny));
                }
            }
        }
        true
    }

    /// Removes states that are unreachable or cannot reach an accepting
    /// state, so every surviving state has a way to finish.
    pub fn trim(self) -> Dfa {
        if self.start == DEAD {
            return Dfa::empty();
        }
        let n = self.len();
        let mut reachable = vec![false; n];
        let mut stack = vec![self.start];
        reachable[self.start as usize] = true;
        while let Some(s) = stack.pop() {
            for byte in 0..=255u8 {
                let t = self.next(s, byte);
                if t != DEAD && !reachable[t as usize] {
                    reachable[t as usize] = true;
                    stack.push(t);
                }
            }
        }
        let mut preds: Vec<Vec<u32>> = vec![Vec::new(); n];
        for s in 0..n {
            if !reachable[s] {
                continue;
            }
            for byte in 0..=255u8 {
                let t = self.next(s as u32, byte);
                if t != DEAD {
                    preds[t as usize].push(s as u32);
                }
            }
        }
        let mut live = vec![false; n];
        let mut stack: Vec<u32> = (0..n as u32).filter(|&s| reachable[s as usize] && self.accept[s as usize]).collect();
        for &s in &stack {
            live[s as usize] = true;
        }
        while let Some(s) = stack.pop() {
            for &p in &preds[s as usize] {
                if !live[p as usize] {
                    live[p as usize] = true;
                    stack.push(p);
                }
            }
        }
        if !live[self.start as usize] {
            return Dfa::empty();
        }
        // Renumber in breadth-first order from the start for stable dumps.
        let mut order = vec![DEAD; n];
        let mut queue = VecDeque::from([self.start]);
        order[self.start as usize] = 0;
        let mut count = 1u32;
        let mut sequence = Vec::new();
        while let Some(s) = queue.pop_front() {
            sequence.push(s);
            for byte in 0..=255u8 {
                let t = self.next(s, byte);
                if t != DEAD && live[t as usize] && order[t as usize] == DEAD {
                    order[t as usize] = count;
                    count += 1;
                    queue.push_back(t);
                }
            }
        }
        let mut trans = vec![DEAD; sequence.len() * 256];
        let mut accept = vec![false; sequence.len()];
        for (new, &old) in sequence.iter().enumerate() {
            accept[new] = self.accept[old as usize];
            for byte in 0..=255usize {
                let t = self.trans[old as usize * 256 + byte];
                if t != DEAD && live[t as usize] {
                    trans[new * 256 + byte] = order[t as usize];
                }
            }
        }
        Dfa { trans, accept, start: 0 }
    }

    /// Fewest characters needed to reach acceptance from each state.
    /// Characters are counted at their first byte.
    pub fn min_chars_to_accept(&self) -> Vec<u32> {
        let n = self.len();
        let mut preds: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n];
        for s in 0..n {
            for byte in 0..=255u8 {
                let t = self.next(s as u32, byte);
                if t != DEAD {
                    preds[t as usize].push((s as u32, char_weight(byte)));
                }
            }
        }
        let mut dist = vec![INFINITE; n];
        let mut deque = VecDeque::new();
        for s in 0..n {
            if self.accept[s] {
                dist[s] = 0;
                deque.push_back(s as u32);
            }
        }
        while let Some(s) = deque.pop_front() {
            let d = dist[s as usize];
            for &(p, w) in &preds[s as usize] {
                let nd = d + w;
                if nd < dist[p as usize] {
                    dist[p as usize] = nd;
                    if w == 0 {
                        deque.push_front(p);
                    } else {
                        deque.push_back(p);
                    }
                }
            }
        }
        dist
    }

    /// Most characters that can still be read before acceptance, or
    /// [`INFINITE`] when a loop is reachable. Assumes a trimmed DFA.
    pub fn max_chars_to_accept(&self) -> Vec<u32> {
        let n = self.len();
        let mut out_degree = vec![0u32; n];
        let mut preds: Vec<Vec<(u32, u32)>> = vec![Vec::new(); n];
        for s in 0..n {
            for byte in 0..=255u8 {
                let t = self.next(s as u32, byte);
                if t != DEAD {
                    out_degree[s] += 1;
                    preds[t as usize].push((s as u32, char_weight(byte)));
                }
            }
        }
        let mut longest = vec![0u32; n];
        let mut done = vec![false; n];
        let mut queue: VecDeque<u32> = (0..n as u32).filter(|&s| out_degree[s as usize] == 0).collect();
        while let Some(s) = queue.pop_front() {
            done[s as usize] = true;
            for &(p, w) in &preds[s as usize] {
                let candidate = longest[s as usize].saturating_add(w);
                if candidate > longest[p as usize] {
                    longest[p as usize] = candidate;
                }
                out_degree[p as usize] -= 1;
                if out_degree[p as usize] == 0 {
                    queue.push_back(p);
                }
            }
        }
        for s in 0..n {
            if !done[s] {
                longest[s] = INFINITE;
            }
        }
        longest
    }

    /// Set of bytes with a live transition out of `state`.
    pub fn live_bytes(&self, state: u32) -> impl Iterator<Item = u8> + '_ {
        (0..=255u8).filter(move |&b| self.next(state, b) != DEAD)
    }

    /// Deterministic text listing, one line per state.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        if self.is_empty() {
            out.push_str("  (empty)\n");
            return out;
        }
        for s in 0..self.len() as u32 {
            out.push_str(&format!("  s{s}{}:", if self.is_accepting(s) { "*" } else { "" }));
            let mut byte = 0usize;
            while byte < 256 {
                let t = self.next(s, byte as u8);
                let mut end = byte;
                while end + 1 < 256 && self.next(s, (end + 1) as u8) == t {
                    end += 1;
                }
                if t != DEAD {
                    if end == byte {
                        out.push_str(&format!(" {}->s{t}", show_byte(byte as u8)));
                    } else {
                        out.push_str(&format!(" {}-{}->s{t}", show_byte(byte as u8), show_byte(end as u8)));
                    }
                }
                byte = end + 1;
            }
            out.push('\n');
        }
        out
    }
}

fn char_weight(byte: u8) -> u32 {
    u32::from(byte & 0xC0 != 0x80)
}

fn show_byte(b: u8) -> String {
    if b.is_ascii_graphic() {
        (b as char).to_string()
    } else {
        format!("\\x{b:02X}")
    }
}

/// Incremental construction of a DFA by hand.
#[derive(Debug, Default)]
pub struct DfaBuilder {
    trans: Vec<u32>,
    accept: Vec<bool>,
}

impl DfaBuilder {
    pub fn new() -> DfaBuilder {
        DfaBuilder::default()
    }

    pub fn add_state(&mut self, accepting: bool) -> u32 {
        self.trans.extend(std::iter::repeat_n(DEAD, 256));
        self.accept.push(accepting);
        (self.accept.len() - 1) as u32
    }

    pub fn set(&mut self, from: u32, byte: u8, to: u32) {
        self.trans[from as usize * 256 + byte as usize] = to;
    }

    pub fn set_range(&mut self, from: u32, lo: u8, hi: u8, to: u32) {
        for b in lo..=hi {
            self.set(from, b, to);
        }
    }

    pub fn get(&self, from: u32, byte: u8) -> u32 {
        self.trans[from as usize * 256 + byte as usize]
    }

    pub fn set_accept(&mut self, state: u32, accepting: bool) {
        self.accept[state as usize] = accepting;
    }

    pub fn len(&self) -> usize {
        self.accept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accept.is_empty()
    }

    pub fn finish(self, start: u32) -> Dfa {
        Dfa { trans: self.trans, accept: self.accept, start }
    }
}

/// Splits top-level `^`/`$` anchors off each alternative; any other
/// assertion is unsupported.
fn split_anchors(hir: Hir) -> Vec<(bool, Hir, bool)> {
    match hir.into_kind() {
        HirKind::Capture(c) => split_anchors(*c.sub),
        HirKind::Alternation(alts) => alts.into_iter().flat_map(split_anchors).collect(),
        HirKind::Look(Look::Start) => vec![(true, Hir::empty(), false)],
        HirKind::Look(Look::End) => vec![(false, Hir::empty(), true)],
        HirKind::Concat(mut items) => {
            let mut start = false;
            let mut end = false;
            while items.first().is_some_and(|h| matches!(h.kind(), HirKind::Look(Look::Start))) {
                items.remove(0);
                start = true;
            }
            while items.last().is_some_and(|h| matches!(h.kind(), HirKind::Look(Look::End))) {
                items.pop();
                end = true;
            }
            vec![(start, Hir::concat(items), end)]
        }
        other => vec![(false, other_kind(other), false)],
    }
}

// `Hir` has no public constructor from a kind, so rebuild the common cases.
fn other_kind(kind: HirKind) -> Hir {
    match kind {
        HirKind::Empty => Hir::empty(),
        HirKind::Literal(l) => Hir::literal(l.0),
        HirKind::Class(c) => Hir::class(c),
        HirKind::Look(l) => Hir::look(l),
        HirKind::Repetition(r) => Hir::repetition(r),
        HirKind::Capture(c) => Hir::capture(c),
        HirKind::Concat(items) => Hir::concat(items),
        HirKind::Alternation(items) => Hir::alternation(items),
    }
}

#[derive(Debug, Clone)]
enum NState {
    Range { lo: u8, hi: u8, next: u32 },
    Split(Vec<u32>),
    Match,
}

#[derive(Debug, Default)]
struct Nfa {
    states: Vec<NState>,
}

impl Nfa {
    fn add(&mut self, s: NState) -> Result<u32, DfaError> {
        if self.states.len() >= MAX_NFA_STATES {
            return Err(DfaError::TooLarge(MAX_NFA_STATES));
        }
        self.states.push(s);
        Ok((self.states.len() - 1) as u32)
    }

    fn any_star(&mut self, next: u32) -> Result<u32, DfaError> {
        let any = Hir::class(Class::Unicode(regex_syntax::hir::ClassUnicode::new([regex_syntax::hir::ClassUnicodeRange::new(
            '\0',
            char::MAX,
        )])));
        self.compile(&Hir::repetition(regex_syntax::hir::Repetition { min: 0, max: None, greedy: true, sub: Box::new(any) }), next)
    }

    /// Compiles `hir` so that a successful match continues at `next`;
    /// returns the entry state.
    fn compile(&mut self, hir: &Hir, next: u32) -> Result<u32, DfaError> {
        match hir.kind() {
            HirKind::Empty => Ok(next),
            HirKind::Literal(lit) => {
                let mut s = next;
                for &b in lit.0.iter().rev() {
                    s = self.add(NState::Range { lo: b, hi: b, next: s })?;
                }
                Ok(s)
            }
            HirKind::Class(Class::Unicode(class)) => {
                let mut entries = Vec::new();
                for range in class.iter() {
                    for seq in Utf8Sequences::new(range.start(), range.end()) {
                        let mut s = next;
                        for r in seq.as_slice().iter().rev() {
                            s = self.add(NState::Range { lo: r.start, hi: r.end, next: s })?;
                        }
                        entries.push(s);
                    }
                }
                self.add(NState::Split(entries))
            }
            HirKind::Class(Class::Bytes(class)) => {
                let mut entries = Vec::new();
                for range in class.iter() {
                    entries.push(self.add(NState::Range { lo: range.start(), hi: range.end(), next })?);
                }
                self.add(NState::Split(entries))
            }
            HirKind::Look(_) => Err(DfaError::Unsupported("assertion inside a pattern")),
            HirKind::Repetition(rep) => {
                let mut s = next;
                match rep.max {
                    None => {
                        let hole = self.add(NState::Split(Vec::new()))?;
                        let body = self.compile(&rep.sub, hole)?;
                        self.states[hole as usize] = NState::Split(vec![body, next]);
                        s = hole;
                    }
                    Some(max) => {
                        for _ in rep.min..max {
                            let body = self.compile(&rep.sub, s)?;
                            s = self.add(NState::Split(vec![body, next]))?;
                        }
                    }
                }
                for _ in 0..rep.min {
                    s = self.compile(&rep.sub, s)?;
                }
                Ok(s)
            }
            HirKind::Capture(c) => self.compile(&c.sub, next),
            HirKind::Concat(items) => {
                let mut s = next;
                for item in items.iter().rev() {
                    s = self.compile(item, s)?;
                }
                Ok(s)
            }
            HirKind::Alternation(items) => {
                let mut entries = Vec::with_capacity(items.len());
                for item in items {
                    entries.push(self.compile(item, next)?);
                }
                self.add(NState::Split(entries))
            }
        }
    }

    fn closure(&self, seeds: &[u32], seen: &mut [u32], stamp: u32) -> Vec<u32> {
        let mut out = Vec::new();
        let mut stack: Vec<u32> = seeds.to_vec();
        while let Some(s) = stack.pop() {
            if seen[s as usize] == stamp {
                continue;
            }
            seen[s as usize] = stamp;
            match &self.states[s as usize] {
                NState::Split(targets) => stack.extend(targets.iter().rev()),
                _ => out.push(s),
            }
        }
        out.sort_unstable();
        out
    }

    fn determinize(&self, start: u32) -> Result<Dfa, DfaError> {
        let mut bounds = vec![false; 257];
        bounds[0] = true;
        bounds[256] = true;
        for s in &self.states {
            if let NState::Range { lo, hi, .. } = s {
                bounds[*lo as usize] = true;
                bounds[*hi as usize + 1] = true;
            }
        }
        let classes: Vec<(u8, u8)> = {
            let cuts: Vec<usize> = (0..=256).filter(|&i| bounds[i]).collect();
            cuts.windows(2).map(|w| (w[0] as u8, (w[1] - 1) as u8)).collect()
        };
        let mut seen = vec![0u32; self.states.len()];
        let mut stamp = 1;
        let mut b = DfaBuilder::new();
        let mut ids: HashMap<Vec<u32>, u32> = HashMap::new();
        let first = self.closure(&[start], &mut seen, stamp);
        let accepting = |set: &[u32]| set.iter().any(|&s| matches!(self.states[s as usize], NState::Match));
        let root = b.add_state(accepting(&first));
        ids.insert(first.clone(), root);
        let mut queue = VecDeque::from([(first, root)]);
        while let Some((set, id)) = queue.pop_front() {
            for &(lo, hi) in &classes {
                let seeds: Vec<u32> = set
                    .iter()
                    .filter_map(|&s| match self.states[s as usize] {
                        NState::Range { lo: a, hi: z, next } if a <= lo && hi <= z => Some(next),
                        _ => None,
                    })
                    .collect();
                if seeds.is_empty() {
                    continue;
                }
                stamp += 1;
                let target_set = self.closure(&seeds, &mut seen, stamp);
                let target = match ids.get(&target_set) {
                    Some(t) => *t,
                    None => {
                        if b.len() >= MAX_DFA_STATES {
                            return Err(DfaError::TooLarge(MAX_DFA_STATES));
                        }
                        let t = b.add_state(accepting(&target_set));
                        ids.insert(target_set.clone(), t);
                        queue.push_back((target_set, t));
                        t
                    }
                };
                b.set_range(id, lo, hi, target);
            }
        }
        Ok(b.finish(root))
    }
}
