//! Vocabularies, token masks and the decoding loop.

pub mod adapter;
pub mod decode;
pub mod mask;
pub mod source;
pub mod trie;
pub mod vocab;
pub mod walk;

pub use adapter::AdapterSource;
pub use decode::{constrained_decode, DecodeOptions, DecodeResult, Termination, Timing};
pub use mask::{advance_token, compute_mask, fast_forward, RejectAt, TokenMask};
pub use source::{AdversarialSource, LogitsSource, ReplaySource, SourceError, UniformSource};
pub use trie::TokenTrie;
pub use vocab::{VocabError, Vocabulary};
pub use walk::{walk_instance, WalkOutcome};
