//! Byte-level BPE tokenizer and token fertility.
//!
//! Text is split into chunks before BPE: a word (maximal non-whitespace run)
//! together with one directly preceding space, or a run of whitespace that
//! is not such a prefix. Merges never cross chunk boundaries, and decoding
//! is plain byte concatenation, so `decode(encode(x)) == x` whenever every
//! byte of `x` was seen in training.

mod bytemap;
mod fertility;
mod train;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use bytemap::{bytes_to_display, display_to_bytes};
pub use fertility::{fertility, fertility_matrix, FertilityMatrix};
pub use train::train_bpe;

use crate::error::{Error, Result};

pub type TokenId = u32;

/// Serialization format version of [`TokenizerFile`].
pub const TOKENIZER_FORMAT_VERSION: u32 = 1;

pub const DEFAULT_VOCAB_SIZE: usize = 8_000;

/// Special token ids. They occupy the first ids of every vocabulary.
pub mod specials {
    use super::TokenId;

    pub const BOS: TokenId = 0;
    pub const PAD: TokenId = 1;
    pub const EOS: TokenId = 2;
    pub const UNK: TokenId = 3;
    pub const MASK: TokenId = 4;
    pub const COUNT: usize = 5;
    pub const NAMES: [&str; COUNT] = ["<s>", "<pad>", "</s>", "<unk>", "<mask>"];

    pub fn is_special(id: TokenId) -> bool {
        (id as usize) < COUNT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Specials {
    pub bos: TokenId,
    pub pad: TokenId,
    pub eos: TokenId,
    pub unk: TokenId,
    pub mask: TokenId,
}

impl Default for Specials {
    fn default() -> Self {
        Self { bos: specials::BOS, pad: specials::PAD, eos: specials::EOS, unk: specials::UNK, mask: specials::MASK }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubwordTokenizer {
    /// Byte content of each id; empty for specials.
    tokens: Vec<Vec<u8>>,
    lookup: BTreeMap<Vec<u8>, TokenId>,
    merges: Vec<(TokenId, TokenId)>,
    /// Pair → (rank, merged id).
    ranks: BTreeMap<(TokenId, TokenId), (usize, TokenId)>,
}

/// On-disk form: vocabulary keyed by display strings plus ordered merges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerFile {
    pub format_version: u32,
    pub vocab_size: usize,
    pub specials: BTreeMap<String, TokenId>,
    pub vocab: BTreeMap<String, TokenId>,
    pub merges: Vec<(String, String)>,
}

impl SubwordTokenizer {
    /// Assembles a tokenizer from its alphabet and ordered merges.
    pub(crate) fn from_parts(alphabet: &[u8], merges: &[(Vec<u8>, Vec<u8>)]) -> Self {
        let mut tokens: Vec<Vec<u8>> = (0..specials::COUNT).map(|_| Vec::new()).collect();
        let mut lookup = BTreeMap::new();
        for &b in alphabet {
            lookup.insert(alloc::vec![b], tokens.len() as TokenId);
            tokens.push(alloc::vec![b]);
        }
        let mut out = Self { tokens, lookup, merges: Vec::new(), ranks: BTreeMap::new() };
        for (l, r) in merges {
            let (li, ri) = (out.lookup[l], out.lookup[r]);
            out.push_merge(li, ri);
        }
        out
    }

    pub(crate) fn push_merge(&mut self, left: TokenId, right: TokenId) -> TokenId {
        let mut bytes = self.tokens[left as usize].clone();
        bytes.extend_from_slice(&self.tokens[right as usize]);
        let id = match self.lookup.get(&bytes) {
            Some(&id) => id,
            None => {
                let id = self.tokens.len() as TokenId;
                self.lookup.insert(bytes.clone(), id);
                self.tokens.push(bytes);
                id
            }
        };
        self.ranks.entry((left, right)).or_insert((self.merges.len(), id));
        self.merges.push((left, right));
        id
    }

    pub fn vocab_size(&self) -> usize {
        self.tokens.len()
    }

    pub fn specials(&self) -> Specials {
        Specials::default()
    }

    pub fn merges(&self) -> &[(TokenId, TokenId)] {
        &self.merges
    }

    pub fn token_bytes(&self, id: TokenId) -> Option<&[u8]> {
        self.tokens.get(id as usize).map(Vec::as_slice)
    }

    /// Display string of a token (special tokens by name).
    pub fn token_str(&self, id: TokenId) -> Option<String> {
        if specials::is_special(id) {
            return Some(String::from(specials::NAMES[id as usize]));
        }
        self.token_bytes(id).map(bytes_to_display)
    }

    pub fn token_id(&self, bytes: &[u8]) -> Option<TokenId> {
        self.lookup.get(bytes).copied()
    }

    pub fn encode(&self, text: &str) -> Vec<TokenId> {
        let mut out = Vec::new();
        for chunk in chunks(text) {
            self.encode_chunk_into(chunk.as_bytes(), &mut out);
        }
        out
    }

    /// Encodes a single chunk (a word, optionally with its leading space).
    pub fn encode_chunk_into(&self, chunk: &[u8], out: &mut Vec<TokenId>) {
        let mut symbols: Vec<TokenId> =
            chunk.iter().map(|b| self.lookup.get(core::slice::from_ref(b)).copied().unwrap_or(specials::UNK)).collect();
        loop {
            let best = symbols
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0], w[1])).map(|&(rank, id)| (rank, w[0], w[1], id)))
                .min();
            let Some((_, l, r, id)) = best else { break };
            let mut merged = Vec::with_capacity(symbols.len());
            let mut i = 0;
            while i < symbols.len() {
                if i + 1 < symbols.len() && symbols[i] == l && symbols[i + 1] == r {
                    merged.push(id);
                    i += 2;
                } else {
                    merged.push(symbols[i]);
                    i += 1;
                }
            }
            symbols = merged;
        }
        out.extend(symbols);
    }

    /// Concatenates token bytes; special tokens contribute nothing.
    pub fn decode(&self, ids: &[TokenId]) -> String {
        let mut bytes = Vec::new();
        for &id in ids {
            if let Some(b) = self.tokens.get(id as usize) {
                bytes.extend_from_slice(b);
            }
        }
        String::from_utf8_lossy(&bytes).into_owned()
    }

    pub fn to_file(&self) -> TokenizerFile {
        let specials = specials::NAMES.iter().enumerate().map(|(i, n)| (String::from(*n), i as TokenId)).collect();
        let vocab = self
            .tokens
            .iter()
            .enumerate()
            .skip(specials::COUNT)
            .map(|(i, b)| (bytes_to_display(b), i as TokenId))
            .collect();
        let merges = self
            .merges
            .iter()
            .map(|&(l, r)| (bytes_to_display(&self.tokens[l as usize]), bytes_to_display(&self.tokens[r as usize])))
            .collect();
        TokenizerFile { format_version: TOKENIZER_FORMAT_VERSION, vocab_size: self.vocab_size(), specials, vocab, merges }
    }

    /// Rebuilds a tokenizer, checking that ids are contiguous and every merge
    /// lands on the recorded vocabulary id.
    pub fn from_file(file: &TokenizerFile) -> Result<Self> {
        let bad = |m: String| Error::Argument(format!("invalid tokenizer file: {m}"));
        if file.format_version != TOKENIZER_FORMAT_VERSION {
            return Err(bad(format!("unsupported format version {}", file.format_version)));
        }
        for (i, name) in specials::NAMES.iter().enumerate() {
            if file.specials.get(*name) != Some(&(i as TokenId)) {
                return Err(bad(format!("special {name} must have id {i}")));
            }
        }
        let mut by_id: Vec<Option<Vec<u8>>> = alloc::vec![None; file.vocab.len() + specials::COUNT];
        for (s, &id) in &file.vocab {
            let bytes = display_to_bytes(s).ok_or_else(|| bad(format!("undecodable token `{s}`")))?;
            let slot = by_id.get_mut(id as usize).ok_or_else(|| bad(format!("id {id} out of range")))?;
            if (id as usize) < specials::COUNT || slot.is_some() {
                return Err(bad(format!("id {id} assigned twice")));
            }
            *slot = Some(bytes);
        }
        let alphabet: Vec<u8> = by_id.iter().flatten().filter(|b| b.len() == 1).map(|b| b[0]).collect();
        let merges = file
            .merges
            .iter()
            .map(|(l, r)| {
                let l = display_to_bytes(l).ok_or_else(|| bad(format!("undecodable merge `{l}`")))?;
                let r = display_to_bytes(r).ok_or_else(|| bad(format!("undecodable merge `{r}`")))?;
                Ok((l, r))
            })
            .collect::<Result<Vec<_>>>()?;
        // Byte tokens get ids in ascending byte order right after the
        // specials, so replaying the merges must reproduce the table.
        let mut sorted = alphabet.clone();
        sorted.sort_unstable();
        let tok = Self::from_parts(&sorted, &merges);
        let rebuilt = tok.to_file();
        if rebuilt.vocab != file.vocab || tok.vocab_size() != file.vocab_size {
            return Err(bad(String::from("vocabulary does not match the merge list")));
        }
        Ok(tok)
    }
}

/// Splits text into BPE chunks. Concatenating the chunks gives back `text`.
pub fn chunks(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let rest = &text[i..];
        let first = rest.chars().next().unwrap();
        if first.is_whitespace() {
            let ws_len = rest.find(|c: char| !c.is_whitespace()).unwrap_or(rest.len());
            let followed_by_word = ws_len < rest.len();
            if followed_by_word && rest[..ws_len].ends_with(' ') {
                if ws_len > 1 {
                    out.push(&rest[..ws_len - 1]);
                }
                let word_end = word_end(&rest[ws_len..]);
                out.push(&rest[ws_len - 1..ws_len + word_end]);
                i += ws_len + word_end;
            } else {
                out.push(&rest[..ws_len]);
                i += ws_len;
            }
        } else {
            let end = word_end(rest);
            out.push(&rest[..end]);
            i += end;
        }
    }
    out
}

fn word_end(s: &str) -> usize {
    s.find(char::is_whitespace).unwrap_or(s.len())
}

/// Whether a chunk carries a word (as opposed to pure whitespace).
pub fn is_word_chunk(chunk: &str) -> bool {
    chunk.chars().any(|c| !c.is_whitespace())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Corpus, Document, Regime};
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn chunking() {
        assert_eq!(chunks("aa aa  b\n\nc "), vec!["aa", " aa", " ", " b", "\n\n", "c", " "]);
        assert_eq!(chunks(" x"), vec![" x"]);
        assert!(chunks("").is_empty());
    }

    fn corpus(texts: &[&str]) -> Corpus {
        let docs = texts.iter().enumerate().map(|(i, t)| Document::new(format!("d{i}"), "s", *t)).collect();
        Corpus::new("c", Regime::Standard, docs).unwrap()
    }

    #[test]
    fn empty_string_encodes_to_nothing() {
        let tok = train_bpe(&corpus(&["bat bi"]), 20).unwrap();
        assert!(tok.encode("").is_empty());
    }

    #[test]
    fn unknown_bytes_become_unk() {
        let tok = train_bpe(&corpus(&["ab ab"]), 9).unwrap();
        assert_eq!(tok.encode("aq"), vec![tok.token_id(b"a").unwrap(), specials::UNK]);
    }

    #[test]
    fn vocab_word_is_one_token() {
        let tok = train_bpe(&corpus(&["kaixo kaixo kaixo mundua kaixo"]), 40).unwrap();
        assert!(tok.token_id(b"kaixo").is_some());
        assert_eq!(tok.encode("kaixo").len(), 1);
        assert_eq!(tok.encode("kaixo kaixo").len(), 2);
    }

    #[test]
    fn file_roundtrip_rebuilds_identical_tokenizer() {
        let tok = train_bpe(&corpus(&["etxea etxean etxera", "mendia mendian mendira"]), 40).unwrap();
        let back = SubwordTokenizer::from_file(&tok.to_file()).unwrap();
        assert_eq!(back, tok);
    }

    #[test]
    fn tampered_file_rejected() {
        let tok = train_bpe(&corpus(&["etxea etxean etxera"]), 20).unwrap();
        let mut f = tok.to_file();
        f.merges.pop();
        assert!(SubwordTokenizer::from_file(&f).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn chunks_concatenate_to_input(s in "[ a-c\n\tá]{0,20}") {
            prop_assert_eq!(chunks(&s).concat(), s);
        }
    }
}
