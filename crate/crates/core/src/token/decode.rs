//! The constrained decoding loop.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::mask::{advance_token, compute_mask, fast_forward, TokenMask};
use super::source::{LogitsSource, SourceError};
use super::trie::TokenTrie;
use super::vocab::Vocabulary;
use crate::compiler::{ConstraintAutomaton, MatcherState, SyntaxMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Eos,
    MaxTokens,
    Timeout,
    /// Nothing was allowed, not even EOS.
    DeadEnd,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub gct: f64,
    pub ttft: f64,
    /// Seconds spent on each output token.
    pub per_token: Vec<f64>,
    pub tgt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecodeResult {
    pub tokens: Vec<u32>,
    #[serde(skip)]
    pub bytes: Vec<u8>,
    pub terminated_by: Termination,
    pub timing: Timing,
    /// Tokens emitted by fast-forwarding instead of sampling.
    pub ff_tokens: usize,
    /// Steps where the source was consulted.
    pub sampled_steps: usize,
}

#[derive(Debug, Clone)]
pub struct DecodeOptions {
    pub max_tokens: usize,
    pub generation_timeout: Duration,
    pub fast_forward: bool,
    /// Off means a pass-through mask: the bare LM loop.
    pub masking: bool,
    /// Sample from the softmax of masked scores instead of taking the argmax.
    pub sample_seed: Option<u64>,
    /// Count compilation time towards TTFT and TGT.
    pub gct_in_ttft: bool,
}

impl Default for DecodeOptions {
    fn default() -> DecodeOptions {
        DecodeOptions {
            max_tokens: 1024,
            generation_timeout: Duration::from_secs(40),
            fast_forward: false,
            masking: true,
            sample_seed: None,
            gct_in_ttft: true,
        }
    }
}

/// Picks the best allowed token; ties go to the lowest id.
fn argmax(scores: &[f32], mask: &TokenMask) -> Option<u32> {
    let mut best: Option<(u32, f32)> = None;
    for id in mask.iter() {
        let s = scores[id as usize];
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((id, s));
        }
    }
    best.map(|(id, _)| id)
}

fn sample(scores: &[f32], mask: &TokenMask, rng: &mut ChaCha8Rng) -> Option<u32> {
    let top = mask.iter().map(|i| scores[i as usize]).fold(f32::NEG_INFINITY, f32::max);
    let weights: Vec<(u32, f64)> = mask.iter().map(|i| (i, f64::from(scores[i as usize] - top).exp())).collect();
    let total: f64 = weights.iter().map(|w| w.1).sum();
    let mut x = rng.gen::<f64>() * total;
    for &(id, w) in &weights {
        if x < w {
            return Some(id);
        }
        x -= w;
    }
    weights.last().map(|w| w.0)
}

struct Clock {
    start: Instant,
    last: Instant,
    first: Option<Duration>,
    per_token: Vec<f64>,
}

impl Clock {
    /// Records `n` tokens that together took the time since the last mark.
    fn mark(&mut self, n: usize) {
        let now = Instant::now();
        let each = (now - self.last).as_secs_f64() / n as f64;
        self.per_token.extend(std::iter::repeat_n(each, n));
        self.first.get_or_insert(now - self.start);
        self.last = now;
    }
}

/// Runs the decoding loop. `prompt` is passed to the source unchanged;
/// `gct` is the compile time of `a`.
pub fn constrained_decode(
    a: &ConstraintAutomaton,
    source: &mut dyn LogitsSource,
    vocab: &Vocabulary,
    trie: &TokenTrie,
    prompt: &[u32],
    opts: &DecodeOptions,
    gct: Duration,
) -> Result<DecodeResult, SourceError> {
    let start = Instant::now();
    let mut clock = Clock { start, last: start, first: None, per_token: Vec::new() };
    let mut rng = opts.sample_seed.map(ChaCha8Rng::seed_from_u64);
    let mut state = MatcherState::new(a, SyntaxMode::Compact);
    let mut tokens: Vec<u32> = Vec::new();
    let mut ff_tokens = 0;
    let mut sampled_steps = 0;
    let eos = vocab.eos_id();
    let terminated_by = loop {
        if tokens.len() >= opts.max_tokens {
            break Termination::MaxTokens;
        }
        if start.elapsed() > opts.generation_timeout {
            break Termination::Timeout;
        }
        if opts.masking && opts.fast_forward {
            let (forced, next) = fast_forward(a, &state, trie, vocab, opts.max_tokens - tokens.len());
            if !forced.is_empty() {
                ff_tokens += forced.len();
                clock.mark(forced.len());
                tokens.extend(forced);
                state = next;
                continue;
            }
        }
        let mask = if opts.masking { compute_mask(a, &state, trie, vocab) } else { TokenMask::full(vocab.len()) };
        if mask.is_empty() {
            break Termination::DeadEnd;
        }
        let scores = source.score(prompt, &tokens)?;
        if scores.len() != vocab.len() {
            return Err(SourceError::Protocol(format!("{} scores for a vocabulary of {}", scores.len(), vocab.len())));
        }
        sampled_steps += 1;
        let pick = match rng.as_mut() {
            Some(r) => sample(&scores, &mask, r),
            None => argmax(&scores, &mask),
        };
        let id = pick.expect("mask is not empty");
        if id == eos {
            break Termination::Eos;
        }
        if opts.masking {
            state = advance_token(a, &state, vocab, id).expect("masked token advances");
        }
        tokens.push(id);
        clock.mark(1);
    };
    let offset = if opts.gct_in_ttft { gct.as_secs_f64() } else { 0.0 };
    let elapsed = start.elapsed();
    let ttft = offset + clock.first.unwrap_or(elapsed).as_secs_f64();
    let tgt = offset + elapsed.as_secs_f64();
    Ok(DecodeResult {
        bytes: vocab.decode(&tokens),
        tokens,
        terminated_by,
        timing: Timing { gct: gct.as_secs_f64(), ttft, per_token: clock.per_token, tgt },
        ff_tokens,
        sampled_steps,
    })
}
