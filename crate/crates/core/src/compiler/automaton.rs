//! The compiled constraint: value alternatives, per-kind sub-automata and
//! the object key automata, plus the productivity pass that removes
//! alternatives with no finite completion.

use std::fmt::Write as _;
use std::time::Duration;

use super::dfa::{Dfa, DEAD, INFINITE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VId(pub u32);

impl VId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// One way a value can be spelled. A value admits the union of its leaves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Leaf {
    Null,
    True,
    False,
    Number(u32),
    String(u32),
    Array(u32),
    Object(u32),
}

#[derive(Debug, Clone)]
pub struct NumberSpec {
    pub dfa: Dfa,
}

#[derive(Debug, Clone)]
pub struct StringSpec {
    /// Runs over the decoded UTF-8 content, escapes already resolved.
    pub dfa: Dfa,
    pub min_len: u64,
    pub max_len: Option<u64>,
    /// Lengths are tracked with a counter instead of being part of the DFA.
    pub counted: bool,
    /// Whether the DFA is exactly the set of valid strings (as opposed to
    /// a subset of it).
    pub exact: bool,
    pub min_left: Vec<u32>,
    pub max_left: Vec<u32>,
}

impl StringSpec {
    /// Whether a string with `count` characters so far, sitting in `state`,
    /// can still be completed within the length bounds.
    pub fn feasible(&self, state: u32, count: u64) -> bool {
        if !self.counted {
            return true;
        }
        let least = count + u64::from(self.min_left[state as usize]);
        if self.max_len.is_some_and(|m| least > m) {
            return false;
        }
        let most = self.max_left[state as usize];
        most == INFINITE || count + u64::from(most) >= self.min_len
    }
}

#[derive(Debug, Clone)]
pub struct ArraySpec {
    /// Element values for the leading positions.
    pub positions: Vec<VId>,
    /// Element value for every later position.
    pub rest: VId,
    pub min: u64,
    pub max: Option<u64>,
}

impl ArraySpec {
    pub fn element(&self, index: u64) -> VId {
        usize::try_from(index).ok().and_then(|i| self.positions.get(i)).copied().unwrap_or(self.rest)
    }
}

/// What a key spells once its closing quote arrives in a given state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KeyEnd {
    /// Not a complete acceptable key.
    Reject,
    /// One of the object's named properties.
    Name(u32),
    /// Any other key; its value must match this value.
    Other(VId),
}

/// Byte-level automaton over key contents.
#[derive(Debug, Clone)]
pub struct KeyAutomaton {
    pub trans: Vec<u32>,
    pub ends: Vec<KeyEnd>,
    /// Names completable from each state.
    pub reach_names: Vec<Bits>,
    /// Whether some non-name key is completable from each state.
    pub reach_other: Vec<bool>,
}

impl KeyAutomaton {
    pub fn next(&self, state: u32, byte: u8) -> u32 {
        self.trans[state as usize * 256 + byte as usize]
    }

    pub fn len(&self) -> usize {
        self.ends.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ends.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct ObjectSpec {
    pub names: Vec<String>,
    /// `None` when the name may not appear.
    pub name_values: Vec<Option<VId>>,
    pub required: Bits,
    /// Names that become required once the keyed name is present.
    pub dependent: Vec<(u32, Bits)>,
    pub keys: KeyAutomaton,
    pub min: u64,
    pub max: Option<u64>,
}

impl ObjectSpec {
    /// Required names still missing given the names seen so far.
    pub fn missing(&self, seen: &Bits) -> Bits {
        let mut need = self.required.clone();
        for (trigger, deps) in &self.dependent {
            if seen.get(*trigger as usize) {
                need.union_with(deps);
            }
        }
        need.subtract(seen);
        need
    }

    /// Size of `missing` once `extra` is seen too, without building the set.
    pub fn missing_count(&self, seen: &Bits, extra: Option<usize>) -> u64 {
        let has = |i: usize| seen.get(i) || extra == Some(i);
        let mut total = 0;
        for (w, &required) in self.required.0.iter().enumerate() {
            let mut need = required;
            for (trigger, deps) in &self.dependent {
                if has(*trigger as usize) {
                    need |= deps.0[w];
                }
            }
            let mut have = seen.0.get(w).copied().unwrap_or(0);
            if let Some(e) = extra.filter(|e| e / 64 == w) {
                have |= 1 << (e % 64);
            }
            total += u64::from((need & !have).count_ones());
        }
        total
    }
}

/// A fixed-size bit set.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Bits(Vec<u64>);

impl Bits {
    pub fn new(len: usize) -> Bits {
        Bits(vec![0; len.div_ceil(64)])
    }

    pub fn get(&self, i: usize) -> bool {
        self.0.get(i / 64).is_some_and(|w| w >> (i % 64) & 1 == 1)
    }

    pub fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    pub fn union_with(&mut self, other: &Bits) -> bool {
        let mut changed = false;
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            let n = *a | b;
            changed |= n != *a;
            *a = n;
        }
        changed
    }

    pub fn subtract(&mut self, other: &Bits) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a &= !b;
        }
    }

    pub fn intersects(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).any(|(a, b)| a & b != 0)
    }

    pub fn count(&self) -> u64 {
        self.0.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|w| *w == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.0.len() * 64).filter(move |&i| self.get(i))
    }
}

/// The constraint used during decoding. Immutable once built.
#[derive(Debug, Clone)]
pub struct ConstraintAutomaton {
    pub values: Vec<Vec<Leaf>>,
    pub numbers: Vec<NumberSpec>,
    pub strings: Vec<StringSpec>,
    pub arrays: Vec<ArraySpec>,
    pub objects: Vec<ObjectSpec>,
    pub root: VId,
    pub max_depth: usize,
    pub compiled_from: String,
    pub compile_time: Duration,
}

impl ConstraintAutomaton {
    pub fn leaves(&self, v: VId) -> &[Leaf] {
        &self.values[v.index()]
    }

    /// Deterministic text listing of every table, for golden tests.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "automaton for {:?}, root v{}, max depth {}", self.compiled_from, self.root.0, self.max_depth);
        for (i, leaves) in self.values.iter().enumerate() {
            let names: Vec<String> = leaves.iter().map(leaf_name).collect();
            let _ = writeln!(out, "v{i} = {}", if names.is_empty() { "(nothing)".to_string() } else { names.join(" | ") });
        }
        for (i, n) in self.numbers.iter().enumerate() {
            let _ = writeln!(out, "number{i}:");
            out.push_str(&n.dfa.dump());
        }
        for (i, s) in self.strings.iter().enumerate() {
            let max = s.max_len.map_or("inf".to_string(), |m| m.to_string());
            let _ = writeln!(out, "string{i}: length {}..{max}{}", s.min_len, if s.counted { " (counted)" } else { "" });
            out.push_str(&s.dfa.dump());
        }
        for (i, a) in self.arrays.iter().enumerate() {
            let positions: Vec<String> = a.positions.iter().map(|v| format!("v{}", v.0)).collect();
            let max = a.max.map_or("inf".to_string(), |m| m.to_string());
            let _ = writeln!(out, "array{i}: [{}] then v{}, items {}..{max}", positions.join(", "), a.rest.0, a.min);
        }
        for (i, o) in self.objects.iter().enumerate() {
            let max = o.max.map_or("inf".to_string(), |m| m.to_string());
            let _ = writeln!(out, "object{i}: properties {}..{max}", o.min);
            for (j, name) in o.names.iter().enumerate() {
                let value = o.name_values[j].map_or("forbidden".to_string(), |v| format!("v{}", v.0));
                let req = if o.required.get(j) { " required" } else { "" };
                let _ = writeln!(out, "  {name:?}: {value}{req}");
            }
            for (trigger, deps) in &o.dependent {
                let deps: Vec<&str> = deps.iter().map(|d| o.names[d].as_str()).collect();
                let _ = writeln!(out, "  {:?} needs {deps:?}", o.names[*trigger as usize]);
            }
            let _ = writeln!(out, "  key states: {}", o.keys.len());
            for s in 0..o.keys.len() {
                let end = match o.keys.ends[s] {
                    KeyEnd::Reject => String::new(),
                    KeyEnd::Name(n) => format!(" ends {:?}", o.names[n as usize]),
                    KeyEnd::Other(v) => format!(" ends other v{}", v.0),
                };
                let mut edges = String::new();
                let mut byte = 0usize;
                while byte < 256 {
                    let t = o.keys.next(s as u32, byte as u8);
                    let mut end_byte = byte;
                    while end_byte + 1 < 256 && o.keys.next(s as u32, (end_byte + 1) as u8) == t {
                        end_byte += 1;
                    }
                    if t != DEAD {
                        let _ = write!(edges, " {:02X}-{:02X}->k{t}", byte, end_byte);
                    }
                    byte = end_byte + 1;
                }
                let _ = writeln!(out, "  k{s}{end}:{edges}");
            }
        }
        out
    }
}

fn leaf_name(leaf: &Leaf) -> String {
    match leaf {
        Leaf::Null => "null".into(),
        Leaf::True => "true".into(),
        Leaf::False => "false".into(),
        Leaf::Number(i) => format!("number{i}"),
        Leaf::String(i) => format!("string{i}"),
        Leaf::Array(i) => format!("array{i}"),
        Leaf::Object(i) => format!("object{i}"),
    }
}

/// Key automaton under construction: ends may refer to values whose
/// productivity is not known yet.
#[derive(Debug, Clone)]
pub(crate) struct RawKeys {
    pub trans: Vec<u32>,
    pub ends: Vec<KeyEnd>,
}

/// Tables as produced by lowering, before the productivity pass.
#[derive(Debug, Default)]
pub(crate) struct RawTables {
    pub values: Vec<Vec<Leaf>>,
    pub numbers: Vec<NumberSpec>,
    pub strings: Vec<StringSpec>,
    pub arrays: Vec<ArraySpec>,
    pub objects: Vec<(ObjectSpec, RawKeys)>,
}

impl RawTables {
    /// Least fixpoint of "has a finite valid completion".
    fn productive(&self) -> Vec<bool> {
        let mut value = vec![false; self.values.len()];
        let mut array = vec![false; self.arrays.len()];
        let mut object = vec![false; self.objects.len()];
        let number: Vec<bool> = self.numbers.iter().map(|n| !n.dfa.is_empty()).collect();
        let string: Vec<bool> = self
            .strings
            .iter()
            .map(|s| !s.dfa.is_empty() && s.feasible(s.dfa.start(), 0))
            .collect();
        loop {
            let mut changed = false;
            for (i, a) in self.arrays.iter().enumerate() {
                if array[i] {
                    continue;
                }
                let ok = (0..a.min).all(|k| value[a.element(k).index()]) && a.max.is_none_or(|m| m >= a.min);
                if ok {
                    array[i] = true;
                    changed = true;
                }
            }
            for (i, (o, raw)) in self.objects.iter().enumerate() {
                if object[i] {
                    continue;
                }
                let usable = |j: usize| o.name_values[j].is_some_and(|v| value[v.index()]);
                let required_ok = o.required.iter().all(usable);
                let needed = o.required.count();
                let others = raw.ends.iter().any(|e| matches!(e, KeyEnd::Other(v) if value[v.index()]));
                let available = (0..o.names.len()).filter(|&j| usable(j)).count() as u64;
                let min_ok = others || available >= o.min;
                if required_ok && min_ok && o.max.is_none_or(|m| m >= needed.max(o.min)) {
                    object[i] = true;
                    changed = true;
                }
            }
            for (i, leaves) in self.values.iter().enumerate() {
                if value[i] {
                    continue;
                }
                let ok = leaves.iter().any(|l| match *l {
                    Leaf::Null | Leaf::True | Leaf::False => true,
                    Leaf::Number(n) => number[n as usize],
                    Leaf::String(s) => string[s as usize],
                    Leaf::Array(a) => array[a as usize],
                    Leaf::Object(o) => object[o as usize],
                });
                if ok {
                    value[i] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        // Leaf-level productivity is folded into the value table by
        // filtering in `finish`; recompute it there from these results.
        let mut out = value;
        out.extend(number);
        out.extend(string);
        out.extend(array);
        out.extend(object);
        out
    }

    /// Prunes unproductive alternatives and computes key reachability.
    /// Returns `None` when the root value has no valid completion.
    pub fn finish(self, root: VId, max_depth: usize, compiled_from: String, compile_time: Duration) -> Option<ConstraintAutomaton> {
        let flags = self.productive();
        let (nv, nn, ns, na) = (self.values.len(), self.numbers.len(), self.strings.len(), self.arrays.len());
        let value_ok = |v: VId| flags[v.index()];
        if !value_ok(root) {
            return None;
        }
        let leaf_ok = |l: &Leaf| match *l {
            Leaf::Null | Leaf::True | Leaf::False => true,
            Leaf::Number(n) => flags[nv + n as usize],
            Leaf::String(s) => flags[nv + nn + s as usize],
            Leaf::Array(a) => flags[nv + nn + ns + a as usize],
            Leaf::Object(o) => flags[nv + nn + ns + na + o as usize],
        };
        let values: Vec<Vec<Leaf>> = self.values.iter().map(|ls| ls.iter().filter(|l| leaf_ok(l)).copied().collect()).collect();
        let arrays: Vec<ArraySpec> = self
            .arrays
            .into_iter()
            .map(|mut a| {
                // No array may grow past its first unusable position.
                let mut cap = a.max;
                for (i, v) in a.positions.iter().enumerate() {
                    if !value_ok(*v) {
                        cap = Some(cap.map_or(i as u64, |c| c.min(i as u64)));
                        break;
                    }
                }
                if !value_ok(a.rest) {
                    let n = a.positions.len() as u64;
                    cap = Some(cap.map_or(n, |c| c.min(n)));
                }
                a.max = cap;
                a
            })
            .collect();
        let objects = self
            .objects
            .into_iter()
            .map(|(mut o, raw)| {
                for v in o.name_values.iter_mut() {
                    if v.is_some_and(|x| !value_ok(x)) {
                        *v = None;
                    }
                }
                let ends: Vec<KeyEnd> = raw
                    .ends
                    .iter()
                    .map(|e| match *e {
                        KeyEnd::Other(v) if !value_ok(v) => KeyEnd::Reject,
                        KeyEnd::Name(n) if o.name_values[n as usize].is_none() => KeyEnd::Reject,
                        other => other,
                    })
                    .collect();
                o.keys = reachability(raw.trans, ends, o.names.len());
                o
            })
            .collect();
        Some(ConstraintAutomaton {
            values,
            numbers: self.numbers,
            strings: self.strings,
            arrays,
            objects,
            root,
            max_depth,
            compiled_from,
            compile_time,
        })
    }
}

fn reachability(trans: Vec<u32>, ends: Vec<KeyEnd>, names: usize) -> KeyAutomaton {
    let n = ends.len();
    let mut reach_names = vec![Bits::new(names); n];
    let mut reach_other = vec![false; n];
    let mut preds: Vec<Vec<u32>> = vec![Vec::new(); n];
    for s in 0..n {
        for b in 0..256 {
            let t = trans[s * 256 + b];
            if t != DEAD {
                preds[t as usize].push(s as u32);
            }
        }
    }
    let mut work = Vec::new();
    for (s, end) in ends.iter().enumerate() {
        match *end {
            KeyEnd::Name(j) => {
                reach_names[s].set(j as usize);
                work.push(s);
            }
            KeyEnd::Other(_) => {
                reach_other[s] = true;
                work.push(s);
            }
            KeyEnd::Reject => {}
        }
    }
    while let Some(s) = work.pop() {
        for &p in &preds[s] {
            let p = p as usize;
            let (src, dst) = if p < s {
                let (a, b) = reach_names.split_at_mut(s);
                (&b[0], &mut a[p])
            } else if p > s {
                let (a, b) = reach_names.split_at_mut(p);
                (&a[s], &mut b[0])
            } else {
                continue;
            };
            let mut changed = dst.union_with(src);
            if reach_other[s] && !reach_other[p] {
                reach_other[p] = true;
                changed = true;
            }
            if changed {
                work.push(p);
            }
        }
    }
    KeyAutomaton { trans, ends, reach_names, reach_other }
}
