//! Fixed-length training sequences: chunking long documents, greedily
//! packing short fragments, and MLM masking.
//!
//! Each fragment is framed as `<s> payload </s>`, so a packed sequence holds
//! one or more framed fragments followed by trailing `<pad>` tokens.

mod mask;

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use mask::{apply_mlm_mask, mask_sequences, MaskedBatch, MaskedRow, MaskingConfig, Replacement, IGNORE_TARGET};

use crate::error::{Error, Result};
use crate::tokenizer::{specials, TokenId};

pub const DEFAULT_SEQ_LEN: usize = 512;
pub const MIN_SEQ_LEN: usize = 8;
/// Tokens added around every fragment.
pub const FRAME_TOKENS: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackedSequence {
    pub token_ids: Vec<TokenId>,
    /// Offsets at which a framed fragment starts.
    pub segment_boundaries: Vec<usize>,
    pub pad_count: usize,
}

impl PackedSequence {
    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }

    /// Recovers boundaries and padding from raw ids (as stored on disk).
    pub fn from_ids(token_ids: Vec<TokenId>) -> Result<Self> {
        let content = token_ids.iter().rposition(|&t| t != specials::PAD).map_or(0, |p| p + 1);
        if token_ids[..content].contains(&specials::PAD) {
            return Err(Error::Argument(format!("padding must be trailing")));
        }
        let segment_boundaries = token_ids[..content]
            .iter()
            .enumerate()
            .filter(|(_, &t)| t == specials::BOS)
            .map(|(i, _)| i)
            .collect();
        let pad_count = token_ids.len() - content;
        Ok(Self { token_ids, segment_boundaries, pad_count })
    }

    /// Non-special tokens of each fragment, in order.
    pub fn payloads(&self) -> Vec<&[TokenId]> {
        let end = self.token_ids.len() - self.pad_count;
        let mut out = Vec::with_capacity(self.segment_boundaries.len());
        for (k, &start) in self.segment_boundaries.iter().enumerate() {
            let stop = self.segment_boundaries.get(k + 1).copied().unwrap_or(end);
            out.push(&self.token_ids[start + 1..stop - 1]);
        }
        out
    }
}

fn check_seq_len(seq_len: usize) -> Result<()> {
    if seq_len < MIN_SEQ_LEN {
        return Err(Error::Argument(format!("sequence length must be at least {MIN_SEQ_LEN}, got {seq_len}")));
    }
    Ok(())
}

/// Splits a document into consecutive chunks of at most `seq_len - 2` tokens.
pub fn chunk_document(token_ids: &[TokenId], seq_len: usize) -> Result<Vec<Vec<TokenId>>> {
    check_seq_len(seq_len)?;
    Ok(token_ids.chunks(seq_len - FRAME_TOKENS).map(<[TokenId]>::to_vec).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PackOutput {
    pub sequences: Vec<PackedSequence>,
    /// Fraction of positions that are not padding.
    pub utilization: f64,
}

/// Packs framed fragments into sequences of exactly `seq_len` tokens.
///
/// First fit in input order: each fragment goes into the earliest sequence
/// that still has room for it, or opens a new one. Fragments that share a
/// sequence keep their input order. Empty fragments are skipped.
pub fn pack_sequences(fragments: &[Vec<TokenId>], seq_len: usize) -> Result<PackOutput> {
    check_seq_len(seq_len)?;
    let max_payload = seq_len - FRAME_TOKENS;
    if let Some((i, f)) = fragments.iter().enumerate().find(|(_, f)| f.len() > max_payload) {
        return Err(Error::Precondition(format!(
            "fragment {i} has {} tokens, more than the {max_payload} that fit in a sequence of {seq_len}",
            f.len()
        )));
    }

    let mut bins: Vec<(Vec<TokenId>, Vec<usize>)> = Vec::new();
    // Indices of bins that can still take the smallest framed fragment.
    let mut open: Vec<usize> = Vec::new();
    for frag in fragments.iter().filter(|f| !f.is_empty()) {
        let need = frag.len() + FRAME_TOKENS;
        let slot = open.iter().position(|&b| seq_len - bins[b].0.len() >= need);
        let b = match slot {
            Some(k) => open[k],
            None => {
                bins.push((Vec::with_capacity(seq_len), Vec::new()));
                open.push(bins.len() - 1);
                bins.len() - 1
            }
        };
        let (ids, bounds) = &mut bins[b];
        bounds.push(ids.len());
        ids.push(specials::BOS);
        ids.extend_from_slice(frag);
        ids.push(specials::EOS);
        if seq_len - ids.len() <= FRAME_TOKENS {
            open.retain(|&x| x != b);
        }
    }

    let mut used = 0usize;
    let sequences: Vec<PackedSequence> = bins
        .into_iter()
        .map(|(mut token_ids, segment_boundaries)| {
            used += token_ids.len();
            let pad_count = seq_len - token_ids.len();
            token_ids.resize(seq_len, specials::PAD);
            PackedSequence { token_ids, segment_boundaries, pad_count }
        })
        .collect();
    let utilization = if sequences.is_empty() { 0.0 } else { used as f64 / (sequences.len() * seq_len) as f64 };
    Ok(PackOutput { sequences, utilization })
}

/// Chunks every document and packs the resulting fragments.
pub fn pack_documents(docs: &[Vec<TokenId>], seq_len: usize) -> Result<PackOutput> {
    let mut fragments = Vec::new();
    for d in docs {
        fragments.extend(chunk_document(d, seq_len)?);
    }
    pack_sequences(&fragments, seq_len)
}
