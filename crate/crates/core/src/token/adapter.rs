//! Line protocol for plugging an external scorer in as a logits source.
//!
//! Each request is one JSON line `{"id":k,"prompt":[..],"output":[..]}`
//! and is answered by one line `{"id":k,"scores":[..]}`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::source::{LogitsSource, SourceError};

#[derive(Debug, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub prompt: Vec<u32>,
    pub output: Vec<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Response {
    pub id: u64,
    pub scores: Vec<f32>,
}

/// A logits source on the far side of a pair of streams.
pub struct AdapterSource<R, W> {
    reader: R,
    writer: W,
    next_id: u64,
    size: usize,
}

impl<R: BufRead, W: Write> AdapterSource<R, W> {
    pub fn new(reader: R, writer: W, vocab_size: usize) -> AdapterSource<R, W> {
        AdapterSource { reader, writer, next_id: 0, size: vocab_size }
    }
}

impl<R: BufRead, W: Write> LogitsSource for AdapterSource<R, W> {
    fn score(&mut self, prompt: &[u32], output: &[u32]) -> Result<Vec<f32>, SourceError> {
        let id = self.next_id;
        self.next_id += 1;
        let request = Request { id, prompt: prompt.to_vec(), output: output.to_vec() };
        let line = serde_json::to_string(&request).expect("request serializes");
        writeln!(self.writer, "{line}").and_then(|_| self.writer.flush()).map_err(|_| SourceError::StreamClosed)?;
        let mut reply = String::new();
        match self.reader.read_line(&mut reply) {
            Ok(0) | Err(_) => return Err(SourceError::StreamClosed),
            Ok(_) => {}
        }
        let response: Response = serde_json::from_str(reply.trim_end()).map_err(|e| SourceError::Protocol(e.to_string()))?;
        if response.id != id {
            return Err(SourceError::Protocol(format!("response id {} for request {id}", response.id)));
        }
        if response.scores.len() != self.size {
            return Err(SourceError::Protocol(format!("{} scores, expected {}", response.scores.len(), self.size)));
        }
        Ok(response.scores)
    }
}

/// Answers protocol requests from `source` until the input ends. This is
/// the adapter side, useful for wrapping any source in a process.
pub fn serve(source: &mut dyn LogitsSource, reader: impl BufRead, mut writer: impl Write) -> Result<(), SourceError> {
    for line in reader.lines() {
        let line = line.map_err(|_| SourceError::StreamClosed)?;
        if line.trim().is_empty() {
            continue;
        }
        let request: Request = serde_json::from_str(&line).map_err(|e| SourceError::Protocol(e.to_string()))?;
        let scores = source.score(&request.prompt, &request.output)?;
        let response = serde_json::to_string(&Response { id: request.id, scores }).expect("response serializes");
        writeln!(writer, "{response}").and_then(|_| writer.flush()).map_err(|_| SourceError::StreamClosed)?;
    }
    Ok(())
}
