//! Per-step allowed-token sets.

use super::trie::{TokenTrie, ROOT};
use super::vocab::Vocabulary;
use crate::compiler::{AdvanceError, ConstraintAutomaton, MatcherState};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenMask {
    bits: Vec<u64>,
    len: usize,
    count: usize,
}

impl TokenMask {
    pub fn empty(len: usize) -> TokenMask {
        TokenMask { bits: vec![0; len.div_ceil(64)], len, count: 0 }
    }

    pub fn full(len: usize) -> TokenMask {
        let mut m = TokenMask::empty(len);
        for i in 0..len {
            m.set(i as u32);
        }
        m
    }

    pub fn set(&mut self, id: u32) {
        let i = id as usize;
        assert!(i < self.len, "token {id} outside a mask of {}", self.len);
        let word = &mut self.bits[i / 64];
        let bit = 1u64 << (i % 64);
        if *word & bit == 0 {
            *word |= bit;
            self.count += 1;
        }
    }

    pub fn get(&self, id: u32) -> bool {
        let i = id as usize;
        i < self.len && self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Number of allowed tokens.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.len as u32).filter(move |&i| self.get(i))
    }

    /// The only allowed token, if exactly one is allowed.
    pub fn singleton(&self) -> Option<u32> {
        if self.count == 1 {
            self.iter().next()
        } else {
            None
        }
    }
}

/// Tokens whose bytes all advance from `s`, plus EOS when `s` may stop.
pub fn compute_mask(a: &ConstraintAutomaton, s: &MatcherState, trie: &TokenTrie, vocab: &Vocabulary) -> TokenMask {
    let mut mask = TokenMask::empty(vocab.len());
    if s.is_dead() {
        return mask;
    }
    if s.can_terminate(a) {
        mask.set(vocab.eos_id());
    }
    let mut stack = vec![(ROOT, s.clone())];
    while let Some((node, state)) = stack.pop() {
        for &(byte, child) in trie.children(node) {
            let mut next = state.clone();
            if next.advance_byte(a, byte).is_err() {
                continue;
            }
            for &id in trie.tokens_at(child) {
                mask.set(id);
            }
            if !trie.children(child).is_empty() {
                stack.push((child, next));
            }
        }
    }
    mask
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("token rejected at byte {offset}: {error}")]
pub struct RejectAt {
    pub offset: usize,
    pub error: AdvanceError,
}

/// Folds [`MatcherState::advance_byte`] over the token's bytes.
pub fn advance_token(a: &ConstraintAutomaton, s: &MatcherState, vocab: &Vocabulary, token: u32) -> Result<MatcherState, RejectAt> {
    let mut next = s.clone();
    for (offset, &b) in vocab.token(token).iter().enumerate() {
        next.advance_byte(a, b).map_err(|error| RejectAt { offset, error })?;
    }
    Ok(next)
}

/// Emits tokens while exactly one non-EOS token is allowed, at most
/// `limit` of them.
pub fn fast_forward(a: &ConstraintAutomaton, s: &MatcherState, trie: &TokenTrie, vocab: &Vocabulary, limit: usize) -> (Vec<u32>, MatcherState) {
    let mut forced = Vec::new();
    let mut state = s.clone();
    while forced.len() < limit {
        let Some(id) = compute_mask(a, &state, trie, vocab).singleton() else { break };
        if id == vocab.eos_id() {
            break;
        }
        state = advance_token(a, &state, vocab, id).expect("masked token advances");
        forced.push(id);
    }
    (forced, state)
}
