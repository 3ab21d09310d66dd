//! Runners that drive the engine over the conformance suite and over
//! schema corpora, and the reports they produce.

pub mod bench;
pub mod conformance;
pub mod report;

use jsonmask::compiler::CompileOptions;
use jsonmask::token::{TokenTrie, Vocabulary};

/// Everything a run shares read-only across workers.
pub struct Engine {
    pub compile: CompileOptions,
    pub vocab: Vocabulary,
    pub trie: TokenTrie,
}

impl Engine {
    pub fn new(vocab: Vocabulary, compile: CompileOptions) -> Engine {
        let trie = TokenTrie::new(&vocab);
        Engine { compile, vocab, trie }
    }

    /// The 256 single-byte tokens plus EOS, default compile options.
    pub fn bytes() -> Engine {
        Engine::new(Vocabulary::bytes(), CompileOptions::default())
    }
}

/// A pool of `jobs` workers; 0 means one per available core.
pub fn pool(jobs: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build().expect("thread pool starts")
}
