//! Logits sources: where per-step token scores come from.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::vocab::Vocabulary;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SourceError {
    #[error("adapter protocol error: {0}")]
    Protocol(String),
    #[error("adapter stream closed")]
    StreamClosed,
}

/// Scores the next token given the prompt and the output so far.
pub trait LogitsSource {
    fn score(&mut self, prompt: &[u32], output: &[u32]) -> Result<Vec<f32>, SourceError>;
}

impl<S: LogitsSource + ?Sized> LogitsSource for Box<S> {
    fn score(&mut self, prompt: &[u32], output: &[u32]) -> Result<Vec<f32>, SourceError> {
        (**self).score(prompt, output)
    }
}

/// Prefers the scripted token at each position, then EOS.
#[derive(Debug, Clone)]
pub struct ReplaySource {
    script: Vec<u32>,
    eos_id: u32,
    size: usize,
}

impl ReplaySource {
    pub fn new(vocab: &Vocabulary, script: Vec<u32>) -> ReplaySource {
        ReplaySource { script, eos_id: vocab.eos_id(), size: vocab.len() }
    }
}

impl LogitsSource for ReplaySource {
    fn score(&mut self, _prompt: &[u32], output: &[u32]) -> Result<Vec<f32>, SourceError> {
        let mut scores = vec![0.0; self.size];
        let want = self.script.get(output.len()).copied().unwrap_or(self.eos_id);
        scores[want as usize] = 1.0;
        Ok(scores)
    }
}

/// Independent uniform scores from a seeded generator.
#[derive(Debug, Clone)]
pub struct UniformSource {
    rng: ChaCha8Rng,
    size: usize,
}

impl UniformSource {
    pub fn new(vocab: &Vocabulary, seed: u64) -> UniformSource {
        UniformSource { rng: ChaCha8Rng::seed_from_u64(seed), size: vocab.len() }
    }
}

impl LogitsSource for UniformSource {
    fn score(&mut self, _prompt: &[u32], _output: &[u32]) -> Result<Vec<f32>, SourceError> {
        Ok((0..self.size).map(|_| self.rng.gen::<f32>()).collect())
    }
}

/// Uniform scores with a push toward closing tokens and EOS, so random
/// walks through recursive structures still end.
///
/// After a quote it sometimes copies a whole quoted literal from the prompt,
/// the way a model copies key names out of a schema. Without that, an object
/// with a required key and open additional properties never closes.
#[derive(Debug, Clone)]
pub struct AdversarialSource {
    rng: ChaCha8Rng,
    bonus: Vec<f32>,
    tokens: Vec<Vec<u8>>,
    /// Quoted literals in the prompt, each with its closing quote.
    literals: Option<Vec<Vec<u8>>>,
    /// Literal being copied and the output length when copying began.
    copy: Option<(Vec<u8>, usize)>,
    /// The output so far, decoded, and how many tokens that covers.
    out: Vec<u8>,
    out_tokens: usize,
}

impl AdversarialSource {
    pub const CLOSING_BONUS: f32 = 0.6;
    pub const EOS_BONUS: f32 = 2.0;
    /// Outweighs every other bonus except EOS.
    pub const COPY_BONUS: f32 = 1.5;
    /// Chance that a quote starts a copy.
    pub const COPY_RATE: f64 = 0.5;

    pub fn new(vocab: &Vocabulary, seed: u64) -> AdversarialSource {
        let bonus = vocab
            .iter()
            .map(|(id, bytes)| {
                if id == vocab.eos_id() {
                    AdversarialSource::EOS_BONUS
                } else if matches!(bytes.first(), Some(b'"' | b']' | b'}')) {
                    AdversarialSource::CLOSING_BONUS
                } else {
                    0.0
                }
            })
            .collect();
        let tokens = vocab.iter().map(|(_, b)| b.to_vec()).collect();
        AdversarialSource { rng: ChaCha8Rng::seed_from_u64(seed), bonus, tokens, literals: None, copy: None, out: Vec::new(), out_tokens: 0 }
    }

    fn decode(&self, ids: &[u32]) -> Vec<u8> {
        ids.iter().flat_map(|&i| self.tokens.get(i as usize).into_iter().flatten().copied()).collect()
    }

    /// Brings the decoded output up to date; outputs only grow within a
    /// decode, so only new tokens are decoded.
    fn sync_output(&mut self, output: &[u32]) {
        if output.len() < self.out_tokens {
            self.out.clear();
            self.out_tokens = 0;
        }
        let fresh = self.decode(&output[self.out_tokens..]);
        self.out.extend_from_slice(&fresh);
        self.out_tokens = output.len();
    }

    /// The text after each opening quote up to and including the next
    /// quote. Escapes are not interpreted.
    fn quoted(text: &[u8]) -> Vec<Vec<u8>> {
        let mut out = Vec::new();
        let mut parts = text.split(|&b| b == b'"');
        parts.next();
        while let (Some(inner), Some(_)) = (parts.next(), parts.next()) {
            let mut lit = inner.to_vec();
            lit.push(b'"');
            out.push(lit);
        }
        out
    }

    /// Bytes of the current copy still to emit, if the output has kept to it.
    fn remaining(&self, out: &[u8]) -> Option<Vec<u8>> {
        let (lit, began) = self.copy.as_ref()?;
        let done = out.get(*began..)?;
        (lit.starts_with(done) && done.len() < lit.len()).then(|| lit[done.len()..].to_vec())
    }
}

impl LogitsSource for AdversarialSource {
    fn score(&mut self, prompt: &[u32], output: &[u32]) -> Result<Vec<f32>, SourceError> {
        let mut scores: Vec<f32> = self.bonus.iter().map(|b| self.rng.gen::<f32>() + b).collect();
        if self.literals.is_none() {
            self.literals = Some(AdversarialSource::quoted(&self.decode(prompt)));
        }
        self.sync_output(output);
        let out = &self.out;
        let mut rest = self.remaining(out);
        if rest.is_none() {
            self.copy = None;
            let literals = self.literals.as_deref().unwrap_or_default();
            if out.last() == Some(&b'"') && !literals.is_empty() && self.rng.gen_bool(AdversarialSource::COPY_RATE) {
                let lit = literals[self.rng.gen_range(0..literals.len())].clone();
                rest = Some(lit.clone());
                self.copy = Some((lit, out.len()));
            }
        }
        if let Some(rest) = rest {
            for (id, bytes) in self.tokens.iter().enumerate() {
                if !bytes.is_empty() && rest.starts_with(bytes) {
                    scores[id] += AdversarialSource::COPY_BONUS;
                }
            }
        }
        Ok(scores)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quoted_literals_keep_their_closing_quote() {
        let lits = AdversarialSource::quoted(br#"x {"a":["bc",""]} "open"#);
        assert_eq!(lits, vec![b"a\"".to_vec(), b"bc\"".to_vec(), b"\"".to_vec()]);
    }

    #[test]
    fn copies_follow_the_output() {
        let v = Vocabulary::bytes();
        let mut src = AdversarialSource::new(&v, 0);
        src.copy = Some((b"name\"".to_vec(), 1));
        let out: Vec<u32> = b"\"na".iter().map(|&b| u32::from(b)).collect();
        src.sync_output(&out);
        assert_eq!(src.remaining(&src.out), Some(b"me\"".to_vec()));
        let off: Vec<u32> = b"\"nax".iter().map(|&b| u32::from(b)).collect();
        src.sync_output(&off);
        assert_eq!(src.remaining(&src.out), None);
    }
}
