use alloc::format;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::PackedSequence;
use crate::error::{Error, Result};
use crate::rng;
use crate::tokenizer::{specials, TokenId};

/// Target value at positions that carry no prediction.
pub const IGNORE_TARGET: TokenId = TokenId::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskingConfig {
    pub mask_rate: f64,
    /// Share of selected positions replaced by `<mask>`.
    pub mask_token_share: f64,
    /// Share of selected positions replaced by a random token.
    pub random_token_share: f64,
}

impl Default for MaskingConfig {
    fn default() -> Self {
        Self { mask_rate: 0.15, mask_token_share: 0.8, random_token_share: 0.1 }
    }
}

impl MaskingConfig {
    pub fn with_rate(mask_rate: f64) -> Self {
        Self { mask_rate, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.mask_rate > 0.0 && self.mask_rate < 1.0) {
            return Err(Error::Argument(format!("mask rate must lie in (0, 1), got {}", self.mask_rate)));
        }
        let (m, r) = (self.mask_token_share, self.random_token_share);
        if !(m >= 0.0 && r >= 0.0 && m + r <= 1.0) {
            return Err(Error::Argument(format!("replacement shares {m} and {r} must be non-negative and sum to at most 1")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Replacement {
    Mask,
    Random,
    Unchanged,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedRow {
    pub inputs: Vec<TokenId>,
    pub targets: Vec<TokenId>,
    pub mask_positions: Vec<usize>,
    /// What happened at each entry of `mask_positions`.
    pub replacements: Vec<Replacement>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MaskedBatch {
    pub rows: Vec<MaskedRow>,
}

impl MaskedBatch {
    pub fn masked_count(&self) -> usize {
        self.rows.iter().map(|r| r.mask_positions.len()).sum()
    }
}

fn mask_row(ids: &[TokenId], config: &MaskingConfig, vocab_size: usize, rng: &mut rng::Rng) -> MaskedRow {
    let mut inputs = ids.to_vec();
    let mut targets = alloc::vec![IGNORE_TARGET; ids.len()];
    let mut mask_positions = Vec::new();
    let mut replacements = Vec::new();
    let random_range = specials::COUNT as TokenId..vocab_size as TokenId;
    for (i, &t) in ids.iter().enumerate() {
        if specials::is_special(t) || !rng.gen_bool(config.mask_rate) {
            continue;
        }
        let u: f64 = rng.gen();
        let kind = if u < config.mask_token_share {
            inputs[i] = specials::MASK;
            Replacement::Mask
        } else if u < config.mask_token_share + config.random_token_share {
            inputs[i] = rng.gen_range(random_range.clone());
            Replacement::Random
        } else {
            Replacement::Unchanged
        };
        targets[i] = t;
        mask_positions.push(i);
        replacements.push(kind);
    }
    MaskedRow { inputs, targets, mask_positions, replacements }
}

fn check_vocab(vocab_size: usize) -> Result<()> {
    if vocab_size <= specials::COUNT {
        return Err(Error::Argument(format!("vocab size {vocab_size} leaves no ordinary token to sample")));
    }
    Ok(())
}

/// Masks one packed sequence. Special tokens and padding are never selected;
/// random replacements are drawn uniformly from the non-special ids.
pub fn apply_mlm_mask(seq: &PackedSequence, mask_rate: f64, seed: u64, vocab_size: usize) -> Result<MaskedBatch> {
    let config = MaskingConfig::with_rate(mask_rate);
    config.validate()?;
    check_vocab(vocab_size)?;
    let mut rng = rng::seeded(seed);
    Ok(MaskedBatch { rows: alloc::vec![mask_row(&seq.token_ids, &config, vocab_size, &mut rng)] })
}

/// Masks many sequences, each with its own seed derived from `seed` and its
/// index, so the result does not depend on how the work is split.
pub fn mask_sequences(seqs: &[PackedSequence], config: &MaskingConfig, seed: u64, vocab_size: usize) -> Result<MaskedBatch> {
    config.validate()?;
    check_vocab(vocab_size)?;
    let rows = seqs
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rng = rng::seeded(rng::derive(seed, &[i as u64]));
            mask_row(&s.token_ids, config, vocab_size, &mut rng)
        })
        .collect();
    Ok(MaskedBatch { rows })
}
