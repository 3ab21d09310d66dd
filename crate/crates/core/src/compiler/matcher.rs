//! Incremental byte matcher over a [`ConstraintAutomaton`].
//!
//! A state is a small set of threads, one per way the bytes so far can be
//! read. Each thread is a stack of frames; the parent part of the stack is
//! shared between threads. Values with several leaves (say a string or an
//! object) fork threads on the first byte, and the threads are merged
//! again when they become equal.

use std::rc::Rc;

use regex_syntax::utf8::Utf8Sequences;

use super::automaton::{Bits, ConstraintAutomaton, KeyEnd, Leaf, ObjectSpec, VId};
use super::dfa::DEAD;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SyntaxMode {
    /// JSON whitespace between tokens is accepted.
    #[default]
    Lenient,
    /// No whitespace outside strings. Used while generating.
    Compact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum AdvanceError {
    #[error("byte rejected")]
    Reject,
    #[error("nesting deeper than the configured maximum")]
    DepthExceeded,
}

/// Progress through a string escape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Esc {
    Plain,
    Backslash,
    /// Reading the hex digits of `\u`; `high` is set for the second half of
    /// a surrogate pair.
    Hex { n: u8, v: u16, high: Option<u16> },
    /// After a high surrogate, waiting for `\`.
    LowSlash(u16),
    /// After a high surrogate and `\`, waiting for `u`.
    LowU(u16),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ArrPhase {
    Open,
    AfterElem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ObjPhase {
    Open,
    Key,
    AfterKey,
    AfterValue,
    Comma,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ObjFrame {
    spec: u32,
    phase: ObjPhase,
    seen: Bits,
    count: u64,
    /// Keys outside the named properties, decoded. Shared, since states
    /// are cloned for every token a mask tries.
    others: Rc<Vec<Box<[u8]>>>,
    key: u32,
    esc: Esc,
    key_buf: Vec<u8>,
    pending: Option<VId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Frame {
    /// The root value is complete.
    Root,
    Value(VId),
    Lit { text: &'static [u8], pos: u8 },
    Num { spec: u32, state: u32 },
    Str { spec: u32, state: u32, count: u64, esc: Esc },
    Arr { spec: u32, count: u64, phase: ArrPhase },
    /// Shared until a byte is accepted, so trying a byte costs no copy.
    Obj(Rc<ObjFrame>),
}

#[derive(Debug, PartialEq, Eq)]
struct Link {
    frame: Frame,
    next: Option<Rc<Link>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Thread {
    top: Frame,
    rest: Option<Rc<Link>>,
    /// Open arrays and objects on the stack.
    depth: usize,
}

impl Thread {
    fn push(&mut self, frame: Frame) {
        let below = std::mem::replace(&mut self.top, frame);
        self.rest = Some(Rc::new(Link { frame: below, next: self.rest.take() }));
    }

    fn pop(&mut self) {
        let link = self.rest.take().expect("root frame is never popped");
        self.top = link.frame.clone();
        self.rest = link.next.clone();
    }

    fn parent_is_root(&self) -> bool {
        self.rest.as_ref().is_some_and(|l| l.frame == Frame::Root && l.next.is_none())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatcherState {
    threads: Vec<Thread>,
    mode: SyntaxMode,
    consumed: u64,
}

/// Outcome flags collected while stepping all threads.
#[derive(Default)]
struct Step {
    out: Vec<Thread>,
    too_deep: bool,
}

fn is_ws(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r')
}

impl MatcherState {
    /// The state before any byte, expecting the root value.
    pub fn new(a: &ConstraintAutomaton, mode: SyntaxMode) -> MatcherState {
        let bottom = Rc::new(Link { frame: Frame::Root, next: None });
        let thread = Thread { top: Frame::Value(a.root), rest: Some(bottom), depth: 0 };
        MatcherState { threads: vec![thread], mode, consumed: 0 }
    }

    pub fn mode(&self) -> SyntaxMode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: SyntaxMode) {
        self.mode = mode;
    }

    /// Bytes accepted so far.
    pub fn consumed(&self) -> u64 {
        self.consumed
    }

    /// True once a byte has been rejected; every later byte is too.
    pub fn is_dead(&self) -> bool {
        self.threads.is_empty()
    }

    /// Deepest nesting among the live readings.
    pub fn depth(&self) -> usize {
        self.threads.iter().map(|t| t.depth).max().unwrap_or(0)
    }

    pub fn advance_byte(&mut self, a: &ConstraintAutomaton, b: u8) -> Result<(), AdvanceError> {
        let mut step = Step::default();
        let mut threads = std::mem::take(&mut self.threads);
        if threads.len() == 1 {
            // The common case; the emptied vector takes the output.
            let thread = threads.pop().expect("one thread");
            step.out = threads;
            self.step(a, thread, b, &mut step);
        } else {
            for thread in threads {
                self.step(a, thread, b, &mut step);
            }
        }
        let mut threads = step.out;
        let mut i = 1;
        while i < threads.len() {
            if threads[..i].contains(&threads[i]) {
                threads.remove(i);
            } else {
                i += 1;
            }
        }
        self.threads = threads;
        if self.threads.is_empty() {
            return Err(if step.too_deep { AdvanceError::DepthExceeded } else { AdvanceError::Reject });
        }
        self.consumed += 1;
        Ok(())
    }

    pub fn advance_bytes(&mut self, a: &ConstraintAutomaton, bytes: &[u8]) -> Result<(), AdvanceError> {
        for &b in bytes {
            self.advance_byte(a, b)?;
        }
        Ok(())
    }

    /// A copy advanced by `bytes`, leaving `self` untouched.
    pub fn advanced(&self, a: &ConstraintAutomaton, bytes: &[u8]) -> Result<MatcherState, AdvanceError> {
        let mut s = self.clone();
        s.advance_bytes(a, bytes)?;
        Ok(s)
    }

    /// Whether the bytes so far form a complete instance.
    pub fn can_terminate(&self, a: &ConstraintAutomaton) -> bool {
        self.threads.iter().any(|t| match &t.top {
            Frame::Root => true,
            Frame::Num { spec, state } => t.parent_is_root() && a.numbers[*spec as usize].dfa.is_accepting(*state),
            _ => false,
        })
    }

    fn step(&self, a: &ConstraintAutomaton, mut t: Thread, b: u8, step: &mut Step) {
        let ws_ok = self.mode == SyntaxMode::Lenient && is_ws(b);
        match &mut t.top {
            Frame::Root => {
                if ws_ok {
                    step.out.push(t);
                }
            }
            Frame::Value(v) => {
                if ws_ok {
                    step.out.push(t);
                    return;
                }
                let v = *v;
                for leaf in a.leaves(v) {
                    let frame = match (*leaf, b) {
                        (Leaf::Null, b'n') => Frame::Lit { text: b"null", pos: 1 },
                        (Leaf::True, b't') => Frame::Lit { text: b"true", pos: 1 },
                        (Leaf::False, b'f') => Frame::Lit { text: b"false", pos: 1 },
                        (Leaf::Number(n), b'-' | b'0'..=b'9') => {
                            let dfa = &a.numbers[n as usize].dfa;
                            let s = if dfa.is_empty() { DEAD } else { dfa.next(dfa.start(), b) };
                            if s == DEAD {
                                continue;
                            }
                            Frame::Num { spec: n, state: s }
                        }
                        (Leaf::String(s), b'"') => {
                            let dfa = &a.strings[s as usize].dfa;
                            if dfa.is_empty() {
                                continue;
                            }
                            Frame::Str { spec: s, state: dfa.start(), count: 0, esc: Esc::Plain }
                        }
                        (Leaf::Array(i), b'[') => Frame::Arr { spec: i, count: 0, phase: ArrPhase::Open },
                        (Leaf::Object(i), b'{') => {
                            let spec = &a.objects[i as usize];
                            Frame::Obj(Rc::new(ObjFrame {
                                spec: i,
                                phase: ObjPhase::Open,
                                seen: Bits::new(spec.names.len()),
                                count: 0,
                                others: Rc::default(),
                                key: 0,
                                esc: Esc::Plain,
                                key_buf: Vec::new(),
                                pending: None,
                            }))
                        }
                        _ => continue,
                    };
                    let mut forked = t.clone();
                    if matches!(frame, Frame::Arr { .. } | Frame::Obj(_)) {
                        if forked.depth >= a.max_depth {
                            step.too_deep = true;
                            continue;
                        }
                        forked.depth += 1;
                    }
                    forked.top = frame;
                    step.out.push(forked);
                }
            }
            Frame::Lit { text, pos } => {
                if text[*pos as usize] != b {
                    return;
                }
                *pos += 1;
                if *pos as usize == text.len() {
                    t.pop();
                }
                step.out.push(t);
            }
            Frame::Num { spec, state } => {
                let dfa = &a.numbers[*spec as usize].dfa;
                let next = dfa.next(*state, b);
                if next != DEAD {
                    *state = next;
                    step.out.push(t);
                } else if dfa.is_accepting(*state) {
                    t.pop();
                    self.step(a, t, b, step);
                }
            }
            Frame::Str { spec, state, count, esc } => {
                let spec_ref = &a.strings[*spec as usize];
                let dfa = &spec_ref.dfa;
                match string_byte(*esc, b, self.mode) {
                    StrByte::Reject => {}
                    StrByte::Close => {
                        let len_ok = !spec_ref.counted || (*count >= spec_ref.min_len && spec_ref.max_len.is_none_or(|m| *count <= m));
                        if dfa.is_accepting(*state) && len_ok {
                            t.pop();
                            step.out.push(t);
                        }
                    }
                    StrByte::Escape(next_esc) => {
                        let (s, c) = (*state, *count);
                        let ok = escape_viable(next_esc, self.mode, |x, y| dfa.next(x, y), s, |x| spec_ref.feasible(x, c + 1));
                        if ok {
                            *esc = next_esc;
                            step.out.push(t);
                        }
                    }
                    StrByte::Char(ch) => {
                        let mut buf = [0u8; 4];
                        let mut s = *state;
                        for &x in ch.encode_utf8(&mut buf).as_bytes() {
                            s = dfa.next(s, x);
                            if s == DEAD {
                                return;
                            }
                        }
                        if spec_ref.feasible(s, *count + 1) {
                            *state = s;
                            *count += 1;
                            *esc = Esc::Plain;
                            step.out.push(t);
                        }
                    }
                    StrByte::Raw(x) => {
                        let s = dfa.next(*state, x);
                        if s == DEAD {
                            return;
                        }
                        let c = *count + u64::from(x & 0xC0 != 0x80);
                        if spec_ref.feasible(s, c) {
                            *state = s;
                            *count = c;
                            step.out.push(t);
                        }
                    }
                }
            }
            Frame::Arr { spec, count, phase } => {
                let arr = &a.arrays[*spec as usize];
                if ws_ok {
                    step.out.push(t);
                    return;
                }
                match (*phase, b) {
                    (ArrPhase::Open, b']') if arr.min == 0 => {
                        t.pop();
                        t.depth -= 1;
                        step.out.push(t);
                    }
                    (ArrPhase::Open, _) => {
                        if arr.max == Some(0) {
                            return;
                        }
                        *phase = ArrPhase::AfterElem;
                        *count = 1;
                        t.push(Frame::Value(arr.element(0)));
                        self.step(a, t, b, step);
                    }
                    (ArrPhase::AfterElem, b']') if *count >= arr.min => {
                        t.pop();
                        t.depth -= 1;
                        step.out.push(t);
                    }
                    (ArrPhase::AfterElem, b',') if arr.max.is_none_or(|m| *count < m) => {
                        let element = arr.element(*count);
                        *count += 1;
                        t.push(Frame::Value(element));
                        step.out.push(t);
                    }
                    _ => {}
                }
            }
            Frame::Obj(o) => {
                let spec = &a.objects[o.spec as usize];
                if o.phase == ObjPhase::Key {
                    if key_byte(spec, o, b, self.mode) {
                        if o.phase == ObjPhase::AfterKey && o.pending.is_none() {
                            return;
                        }
                        step.out.push(t);
                    }
                    return;
                }
                if ws_ok {
                    step.out.push(t);
                    return;
                }
                let closable = o.count >= spec.min && spec.missing_count(&o.seen, None) == 0;
                match (o.phase, b) {
                    (ObjPhase::Open | ObjPhase::AfterValue, b'}') if closable => {
                        t.pop();
                        t.depth -= 1;
                        step.out.push(t);
                    }
                    (ObjPhase::Open | ObjPhase::Comma, b'"') if key_viable(spec, o, spec.keys_start()) => {
                        let o = Rc::make_mut(o);
                        o.phase = ObjPhase::Key;
                        o.key = spec.keys_start();
                        o.esc = Esc::Plain;
                        o.key_buf.clear();
                        step.out.push(t);
                    }
                    (ObjPhase::AfterValue, b',') if spec.max.is_none_or(|m| o.count < m) && key_viable(spec, o, spec.keys_start()) => {
                        Rc::make_mut(o).phase = ObjPhase::Comma;
                        step.out.push(t);
                    }
                    (ObjPhase::AfterKey, b':') => {
                        let o = Rc::make_mut(o);
                        let value = o.pending.take().expect("key end sets the value");
                        o.phase = ObjPhase::AfterValue;
                        t.push(Frame::Value(value));
                        step.out.push(t);
                    }
                    _ => {}
                }
            }
        }
    }
}

impl ObjectSpec {
    fn keys_start(&self) -> u32 {
        0
    }
}

/// Whether a key in automaton state `k` can still be completed into a key
/// that fits the object.
fn key_viable(spec: &ObjectSpec, o: &ObjFrame, k: u32) -> bool {
    if k == DEAD || k as usize >= spec.keys.len() {
        return false;
    }
    let room = |missing: u64| spec.max.is_none_or(|m| o.count + 1 + missing <= m);
    if spec.keys.reach_other[k as usize] && room(spec.missing_count(&o.seen, None)) {
        return true;
    }
    spec.keys.reach_names[k as usize].iter().any(|n| !o.seen.get(n) && room(spec.missing_count(&o.seen, Some(n))))
}

/// Advances an object frame that is reading a key. Returns false on reject,
/// leaving the frame untouched.
fn key_byte(spec: &ObjectSpec, frame: &mut Rc<ObjFrame>, b: u8, mode: SyntaxMode) -> bool {
    let o = &**frame;
    match string_byte(o.esc, b, mode) {
        StrByte::Reject => false,
        StrByte::Close => {
            let room = |missing: u64| spec.max.is_none_or(|m| o.count + 1 + missing <= m);
            match spec.keys.ends[o.key as usize] {
                KeyEnd::Reject => false,
                KeyEnd::Name(n) => {
                    let n = n as usize;
                    if o.seen.get(n) {
                        return false;
                    }
                    if !room(spec.missing_count(&o.seen, Some(n))) {
                        return false;
                    }
                    let o = Rc::make_mut(frame);
                    o.seen.set(n);
                    o.count += 1;
                    o.pending = spec.name_values[n];
                    o.phase = ObjPhase::AfterKey;
                    o.pending.is_some()
                }
                KeyEnd::Other(v) => {
                    if o.others.iter().any(|k| **k == *o.key_buf) || !room(spec.missing_count(&o.seen, None)) {
                        return false;
                    }
                    let o = Rc::make_mut(frame);
                    Rc::make_mut(&mut o.others).push(std::mem::take(&mut o.key_buf).into_boxed_slice());
                    o.count += 1;
                    o.pending = Some(v);
                    o.phase = ObjPhase::AfterKey;
                    true
                }
            }
        }
        StrByte::Escape(next) => {
            if escape_viable(next, mode, |x, y| spec.keys.next(x, y), o.key, |k| key_viable(spec, o, k)) {
                Rc::make_mut(frame).esc = next;
                true
            } else {
                false
            }
        }
        StrByte::Char(ch) => {
            let mut buf = [0u8; 4];
            let mut k = o.key;
            for &x in ch.encode_utf8(&mut buf).as_bytes() {
                k = spec.keys.next(k, x);
                if k == DEAD {
                    return false;
                }
            }
            if !key_viable(spec, o, k) {
                return false;
            }
            let o = Rc::make_mut(frame);
            o.key = k;
            o.esc = Esc::Plain;
            o.key_buf.extend_from_slice(ch.encode_utf8(&mut buf).as_bytes());
            true
        }
        StrByte::Raw(x) => {
            let k = spec.keys.next(o.key, x);
            if k == DEAD || !key_viable(spec, o, k) {
                return false;
            }
            let o = Rc::make_mut(frame);
            o.key = k;
            o.key_buf.push(x);
            true
        }
    }
}

enum StrByte {
    Reject,
    /// Closing quote.
    Close,
    /// An escape is in progress and moves to this state.
    Escape(Esc),
    /// An escape completed, decoding to this character.
    Char(char),
    /// A raw content byte.
    Raw(u8),
}

/// Control characters without a short escape; in compact mode these are
/// the only ones `\u` may spell.
const COMPACT_UNICODE: [(u32, u32); 3] = [(0x00, 0x07), (0x0B, 0x0B), (0x0E, 0x1F)];

/// Lexical step inside a JSON string. Compact mode only admits the escapes
/// a canonical serializer writes.
fn string_byte(esc: Esc, b: u8, mode: SyntaxMode) -> StrByte {
    let compact = mode == SyntaxMode::Compact;
    match esc {
        Esc::Plain => match b {
            b'"' => StrByte::Close,
            b'\\' => StrByte::Escape(Esc::Backslash),
            0..=0x1F => StrByte::Reject,
            _ => StrByte::Raw(b),
        },
        Esc::Backslash => match b {
            b'"' => StrByte::Char('"'),
            b'\\' => StrByte::Char('\\'),
            b'/' if !compact => StrByte::Char('/'),
            b'b' => StrByte::Char('\u{8}'),
            b'f' => StrByte::Char('\u{c}'),
            b'n' => StrByte::Char('\n'),
            b'r' => StrByte::Char('\r'),
            b't' => StrByte::Char('\t'),
            b'u' => StrByte::Escape(Esc::Hex { n: 0, v: 0, high: None }),
            _ => StrByte::Reject,
        },
        Esc::LowSlash(h) if b == b'\\' => StrByte::Escape(Esc::LowU(h)),
        Esc::LowU(h) if b == b'u' => StrByte::Escape(Esc::Hex { n: 0, v: 0, high: Some(h) }),
        Esc::LowSlash(_) | Esc::LowU(_) => StrByte::Reject,
        Esc::Hex { n, v, high } => {
            let Some(d) = (b as char).to_digit(16) else { return StrByte::Reject };
            let v = v << 4 | d as u16;
            if n < 3 {
                return StrByte::Escape(Esc::Hex { n: n + 1, v, high });
            }
            if compact && !COMPACT_UNICODE.iter().any(|&(lo, hi)| (lo..=hi).contains(&u32::from(v))) {
                return StrByte::Reject;
            }
            match (high, v) {
                (None, 0xD800..=0xDBFF) => StrByte::Escape(Esc::LowSlash(v)),
                (None, 0xDC00..=0xDFFF) => StrByte::Reject,
                (None, _) => StrByte::Char(char::from_u32(u32::from(v)).expect("not a surrogate")),
                (Some(h), 0xDC00..=0xDFFF) => {
                    let c = 0x10000 + ((u32::from(h) - 0xD800) << 10) + (u32::from(v) - 0xDC00);
                    StrByte::Char(char::from_u32(c).expect("valid pair"))
                }
                (Some(_), _) => StrByte::Reject,
            }
        }
    }
}

/// Code point ranges an escape in progress can still decode to.
fn escape_ranges(esc: Esc, mode: SyntaxMode) -> Vec<(u32, u32)> {
    let ranges = lenient_escape_ranges(esc);
    if mode == SyntaxMode::Lenient {
        return ranges;
    }
    let mut out = Vec::new();
    for (lo, hi) in ranges {
        for (a, b) in COMPACT_UNICODE {
            if lo.max(a) <= hi.min(b) {
                out.push((lo.max(a), hi.min(b)));
            }
        }
    }
    // `\` itself can still become a short escape.
    if esc == Esc::Backslash {
        out.extend([(0x08, 0x0A), (0x0C, 0x0D), (0x22, 0x22), (0x5C, 0x5C)]);
    }
    out
}

fn lenient_escape_ranges(esc: Esc) -> Vec<(u32, u32)> {
    let supplementary = |lo_high: u32, hi_high: u32| (0x10000 + ((lo_high - 0xD800) << 10), 0x10000 + ((hi_high - 0xD800) << 10) + 0x3FF);
    match esc {
        Esc::Plain => Vec::new(),
        Esc::Backslash => vec![(0, 0xD7FF), (0xE000, 0x10FFFF)],
        Esc::LowSlash(h) | Esc::LowU(h) => vec![supplementary(u32::from(h), u32::from(h))],
        Esc::Hex { n, v, high } => {
            let shift = 4 * (4 - u32::from(n));
            let lo = u32::from(v) << shift;
            let hi = lo + (1 << shift) - 1;
            let clip = |a: u32, b: u32| (lo.max(a) <= hi.min(b)).then(|| (lo.max(a), hi.min(b)));
            match high {
                None => {
                    let mut out: Vec<(u32, u32)> = [clip(0, 0xD7FF), clip(0xE000, 0xFFFF)].into_iter().flatten().collect();
                    if let Some((a, b)) = clip(0xD800, 0xDBFF) {
                        out.push(supplementary(a, b));
                    }
                    out
                }
                Some(h) => match clip(0xDC00, 0xDFFF) {
                    Some((a, b)) => {
                        let base = 0x10000 + ((u32::from(h) - 0xD800) << 10);
                        vec![(base + a - 0xDC00, base + b - 0xDC00)]
                    }
                    None => Vec::new(),
                },
            }
        }
    }
}

/// Whether some character the escape can still decode to moves the
/// automaton from `state` to a state accepted by `ok`.
fn escape_viable(esc: Esc, mode: SyntaxMode, next: impl Fn(u32, u8) -> u32, state: u32, ok: impl Fn(u32) -> bool) -> bool {
    for (lo, hi) in escape_ranges(esc, mode) {
        let (Some(lo), Some(hi)) = (char::from_u32(lo), char::from_u32(hi)) else { continue };
        for seq in Utf8Sequences::new(lo, hi) {
            let mut states = vec![state];
            for range in seq.as_slice() {
                let mut following = Vec::new();
                for &s in &states {
                    for byte in range.start..=range.end {
                        let t = next(s, byte);
                        if t != DEAD && !following.contains(&t) {
                            following.push(t);
                        }
                    }
                }
                states = following;
                if states.is_empty() {
                    break;
                }
            }
            if states.into_iter().any(&ok) {
                return true;
            }
        }
    }
    false
}
