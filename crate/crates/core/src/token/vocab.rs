//! Token id to byte sequence tables.

use std::collections::BTreeMap;
use std::path::Path;

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde::Deserialize;

#[derive(Debug, thiserror::Error)]
pub enum VocabError {
    #[error("reading vocabulary: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed vocabulary: {0}")]
    Malformed(String),
    #[error("token ids are not dense: id {0} is missing")]
    GapInIds(u32),
    #[error("no usable eos_id in the header")]
    MissingEos,
    #[error("token {0} has an empty byte sequence")]
    EmptyToken(u32),
}

#[derive(Deserialize)]
struct Header {
    eos_id: Option<u32>,
}

/// The body is either an array indexed by id or an object keyed by id.
#[derive(Deserialize)]
#[serde(untagged)]
enum Body {
    Dense(Vec<String>),
    Keyed(BTreeMap<String, String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<Vec<u8>>,
    eos_id: u32,
}

impl Vocabulary {
    /// `tokens[eos_id]` is ignored and stored empty.
    pub fn new(mut tokens: Vec<Vec<u8>>, eos_id: u32) -> Result<Vocabulary, VocabError> {
        let eos = eos_id as usize;
        if eos >= tokens.len() {
            return Err(VocabError::MissingEos);
        }
        tokens[eos].clear();
        if let Some(i) = tokens.iter().enumerate().position(|(i, t)| i != eos && t.is_empty()) {
            return Err(VocabError::EmptyToken(i as u32));
        }
        Ok(Vocabulary { tokens, eos_id })
    }

    /// One token per byte value (ids 0..=255, id = byte) plus EOS at 256.
    pub fn bytes() -> Vocabulary {
        let mut tokens: Vec<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
        tokens.push(Vec::new());
        Vocabulary { tokens, eos_id: 256 }
    }

    /// Parses the two-part file format: a header line `{"eos_id":n}`, then
    /// the base64 token table.
    pub fn parse(text: &str) -> Result<Vocabulary, VocabError> {
        let (head, body) = text.trim_start().split_once('\n').ok_or_else(|| VocabError::Malformed("expected a header line".into()))?;
        let header: Header = serde_json::from_str(head).map_err(|e| VocabError::Malformed(format!("header: {e}")))?;
        let body: Body = serde_json::from_str(body).map_err(|e| VocabError::Malformed(format!("token table: {e}")))?;
        let encoded: Vec<String> = match body {
            Body::Dense(list) => list,
            Body::Keyed(map) => {
                let mut by_id = BTreeMap::new();
                for (k, v) in map {
                    let id: u32 = k.parse().map_err(|_| VocabError::Malformed(format!("token id {k:?}")))?;
                    by_id.insert(id, v);
                }
                let mut out = Vec::with_capacity(by_id.len());
                for (expected, (id, v)) in by_id.into_iter().enumerate() {
                    if id != expected as u32 {
                        return Err(VocabError::GapInIds(expected as u32));
                    }
                    out.push(v);
                }
                out
            }
        };
        let tokens = encoded
            .iter()
            .enumerate()
            .map(|(i, s)| STANDARD.decode(s).map_err(|e| VocabError::Malformed(format!("token {i}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        Vocabulary::new(tokens, header.eos_id.ok_or(VocabError::MissingEos)?)
    }

    pub fn load(path: &Path) -> Result<Vocabulary, VocabError> {
        Vocabulary::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_file_string(&self) -> String {
        let encoded: Vec<String> = self.tokens.iter().map(|t| STANDARD.encode(t)).collect();
        format!("{{\"eos_id\":{}}}\n{}\n", self.eos_id, serde_json::to_string(&encoded).expect("strings serialize"))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn eos_id(&self) -> u32 {
        self.eos_id
    }

    pub fn token(&self, id: u32) -> &[u8] {
        &self.tokens[id as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &[u8])> {
        self.tokens.iter().enumerate().map(|(i, t)| (i as u32, t.as_slice()))
    }

    /// Bytes of a token sequence, EOS contributing nothing.
    pub fn decode(&self, ids: &[u32]) -> Vec<u8> {
        ids.iter().flat_map(|&id| self.token(id).iter().copied()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_errors() {
        let v = Vocabulary::bytes();
        assert_eq!(v.len(), 257);
        assert_eq!(Vocabulary::parse(&v.to_file_string()).unwrap(), v);
        let gap = "{\"eos_id\":1}\n{\"0\":\"YQ==\",\"2\":\"Yg==\"}";
        assert!(matches!(Vocabulary::parse(gap), Err(VocabError::GapInIds(1))));
        let no_eos = "{}\n[\"YQ==\",\"\"]";
        assert!(matches!(Vocabulary::parse(no_eos), Err(VocabError::MissingEos)));
        let out_of_range = "{\"eos_id\":5}\n[\"YQ==\"]";
        assert!(matches!(Vocabulary::parse(out_of_range), Err(VocabError::MissingEos)));
        let keyed = "{\"eos_id\":1}\n{\"1\":\"\",\"0\":\"YWI=\"}";
        assert_eq!(Vocabulary::parse(keyed).unwrap().token(0), b"ab");
    }
}
