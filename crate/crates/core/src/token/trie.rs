//! Byte prefix tree over a vocabulary.

use super::vocab::Vocabulary;

#[derive(Debug, Clone, Default)]
struct TrieNode {
    /// Sorted by byte.
    children: Vec<(u8, u32)>,
    /// Tokens whose bytes end here.
    tokens: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct TokenTrie {
    nodes: Vec<TrieNode>,
}

pub const ROOT: u32 = 0;

impl TokenTrie {
    /// Every token except EOS, which has no bytes.
    pub fn new(vocab: &Vocabulary) -> TokenTrie {
        let mut nodes = vec![TrieNode::default()];
        for (id, bytes) in vocab.iter() {
            if id == vocab.eos_id() {
                continue;
            }
            let mut n = ROOT as usize;
            for &b in bytes {
                n = match nodes[n].children.binary_search_by_key(&b, |c| c.0) {
                    Ok(i) => nodes[n].children[i].1 as usize,
                    Err(i) => {
                        let child = nodes.len();
                        nodes.push(TrieNode::default());
                        nodes[n].children.insert(i, (b, child as u32));
                        child
                    }
                };
            }
            nodes[n].tokens.push(id);
        }
        TokenTrie { nodes }
    }

    /// Node count, root included.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.len() == 1
    }

    pub fn children(&self, node: u32) -> &[(u8, u32)] {
        &self.nodes[node as usize].children
    }

    pub fn tokens_at(&self, node: u32) -> &[u32] {
        &self.nodes[node as usize].tokens
    }

    pub fn child(&self, node: u32, byte: u8) -> Option<u32> {
        let c = &self.nodes[node as usize].children;
        c.binary_search_by_key(&byte, |x| x.0).ok().map(|i| c[i].1)
    }

    /// Node reached by spelling `bytes` from the root.
    pub fn find(&self, bytes: &[u8]) -> Option<u32> {
        bytes.iter().try_fold(ROOT, |n, &b| self.child(n, b))
    }

    /// Longest token that is a prefix of `bytes`, with its length. Ties
    /// between tokens with equal bytes go to the lowest id.
    pub fn longest_match(&self, bytes: &[u8]) -> Option<(u32, usize)> {
        let mut best = None;
        let mut n = ROOT;
        for (i, &b) in bytes.iter().enumerate() {
            match self.child(n, b) {
                Some(c) => n = c,
                None => break,
            }
            if let Some(&id) = self.tokens_at(n).iter().min() {
                best = Some((id, i + 1));
            }
        }
        best
    }

    /// Greedy longest-match tokenization. `Err` carries the offset of the
    /// first byte no token starts with.
    pub fn tokenize(&self, bytes: &[u8]) -> Result<Vec<u32>, usize> {
        let mut out = Vec::new();
        let mut pos = 0;
        while pos < bytes.len() {
            let (id, len) = self.longest_match(&bytes[pos..]).ok_or(pos)?;
            out.push(id);
            pos += len;
        }
        Ok(out)
    }
}
