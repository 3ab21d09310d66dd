//! Logits sources for CLI runs.

use std::io::BufReader;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use jsonmask::schema::DatasetRecord;
use jsonmask::token::{AdapterSource, AdversarialSource, LogitsSource, SourceError, UniformSource, Vocabulary};

use crate::config::SourceSpec;

/// FNV-1a, so per-schema seeds do not depend on the standard hasher.
fn stable_hash(text: &str) -> u64 {
    text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// Seed for one sample of one schema.
pub fn seed_for(base: u64, source_id: &str, sample: usize) -> u64 {
    base ^ stable_hash(source_id).wrapping_add(sample as u64)
}

struct ProcessSource {
    child: Child,
    inner: AdapterSource<BufReader<ChildStdout>, ChildStdin>,
}

impl LogitsSource for ProcessSource {
    fn score(&mut self, prompt: &[u32], output: &[u32]) -> Result<Vec<f32>, SourceError> {
        self.inner.score(prompt, output)
    }
}

impl Drop for ProcessSource {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Stands in for an adapter that could not be started.
struct Unavailable;

impl LogitsSource for Unavailable {
    fn score(&mut self, _: &[u32], _: &[u32]) -> Result<Vec<f32>, SourceError> {
        Err(SourceError::StreamClosed)
    }
}

fn spawn(command: &[String], vocab_size: usize) -> Box<dyn LogitsSource> {
    let Some((program, args)) = command.split_first() else { return Box::new(Unavailable) };
    let child = Command::new(program).args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::inherit()).spawn();
    match child {
        Ok(mut child) => match (child.stdout.take(), child.stdin.take()) {
            (Some(out), Some(inp)) => Box::new(ProcessSource { inner: AdapterSource::new(BufReader::new(out), inp, vocab_size), child }),
            _ => Box::new(Unavailable),
        },
        Err(_) => Box::new(Unavailable),
    }
}

pub fn make_source(spec: &SourceSpec, vocab: &Vocabulary, seed: u64, record: &DatasetRecord, sample: usize) -> Box<dyn LogitsSource> {
    let seed = seed_for(seed, record.source_id(), sample);
    match spec {
        SourceSpec::Adversarial => Box::new(AdversarialSource::new(vocab, seed)),
        SourceSpec::Uniform => Box::new(UniformSource::new(vocab, seed)),
        SourceSpec::Adapter { command } => spawn(command, vocab.len()),
    }
}
