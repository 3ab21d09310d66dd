//! Walking externally produced instances through the constraint.

use serde::Serialize;

use super::mask::advance_token;
use super::trie::TokenTrie;
use super::vocab::Vocabulary;
use crate::compiler::{ConstraintAutomaton, MatcherState, SyntaxMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", content = "at", rename_all = "snake_case")]
pub enum WalkOutcome {
    Accepted,
    /// Byte offset of the first rejected byte.
    RejectedAt(usize),
    /// Every byte advanced but the instance is incomplete.
    PrematureEnd,
    /// No token starts at this byte offset.
    UntokenizableBytes(usize),
}

impl WalkOutcome {
    pub fn accepted(self) -> bool {
        self == WalkOutcome::Accepted
    }
}

/// Tokenizes `bytes` by greedy longest match, advances token by token,
/// then requires that the instance may end.
pub fn walk_instance(a: &ConstraintAutomaton, vocab: &Vocabulary, trie: &TokenTrie, bytes: &[u8]) -> WalkOutcome {
    let tokens = match trie.tokenize(bytes) {
        Ok(t) => t,
        Err(pos) => return WalkOutcome::UntokenizableBytes(pos),
    };
    let mut state = MatcherState::new(a, SyntaxMode::Lenient);
    let mut pos = 0;
    for id in tokens {
        match advance_token(a, &state, vocab, id) {
            Ok(next) => state = next,
            Err(e) => return WalkOutcome::RejectedAt(pos + e.offset),
        }
        pos += vocab.token(id).len();
    }
    if state.can_terminate(a) {
        WalkOutcome::Accepted
    } else {
        WalkOutcome::PrematureEnd
    }
}
