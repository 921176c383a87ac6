//! A small bidirectional transformer encoder with an MLM head, trained with
//! hand-written backpropagation.
//!
//! All parameters live in one flat vector described by a [`Layout`]; the
//! same layout indexes gradients and optimizer moments.

mod model;
pub(crate) mod ops;
mod probe;
mod train;

use alloc::format;
use alloc::vec::Vec;
use core::ops::Range;

use serde::{Deserialize, Serialize};

pub use model::{
    backward_hidden, forward_hidden, forward_mlm, gradient_check, mlm_loss_and_grad, random_check_config, GradCheck, HiddenCache,
    MlmOutput, ZERO_MASKED_WARNING,
};
pub use ops::Scalar;
pub use probe::{lr_stability_probe, ProbeConfig, ProbeOutcome, ProbeRecord, StabilityReport, EXPLOSION_GRAD_NORM};
pub use train::{
    lr_at, select_best_checkpoint, train, train_step, validation_loss, AdamW, Checkpoint, StepOutcome, TrainConfig, TrainOutcome, TrainState,
};

use crate::error::{Error, Result};
use crate::rng;
use crate::tokenizer::specials;

pub const INIT_STD: f64 = 0.02;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeClass {
    Toy,
    Medium,
    Base,
    Large,
}

impl SizeClass {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "toy" => Ok(Self::Toy),
            "medium" => Ok(Self::Medium),
            "base" => Ok(Self::Base),
            "large" => Ok(Self::Large),
            _ => Err(Error::Config(format!("unknown size class `{s}`"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Toy => "toy",
            Self::Medium => "medium",
            Self::Base => "base",
            Self::Large => "large",
        }
    }

    /// (layers, hidden, heads, ffn).
    pub fn shape(self) -> (usize, usize, usize, usize) {
        match self {
            Self::Toy => (2, 64, 4, 256),
            Self::Medium => (8, 512, 8, 2048),
            Self::Base => (12, 768, 12, 3072),
            Self::Large => (24, 1024, 16, 4096),
        }
    }

    /// Peak learning rate found stable at full scale for each size.
    pub fn reference_lr(self) -> f64 {
        match self {
            Self::Toy => 1e-3,
            Self::Medium => 8e-4,
            Self::Base => 4e-4,
            Self::Large => 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub layers: usize,
    pub hidden_dim: usize,
    pub heads: usize,
    pub ffn_dim: usize,
    pub vocab_size: usize,
    pub max_positions: usize,
    pub size_class: SizeClass,
}

impl EncoderConfig {
    pub fn for_size(size_class: SizeClass, vocab_size: usize, max_positions: usize) -> Self {
        let (layers, hidden_dim, heads, ffn_dim) = size_class.shape();
        Self { layers, hidden_dim, heads, ffn_dim, vocab_size, max_positions, size_class }
    }

    pub fn toy(vocab_size: usize, max_positions: usize) -> Self {
        Self::for_size(SizeClass::Toy, vocab_size, max_positions)
    }

    pub fn head_dim(&self) -> usize {
        self.hidden_dim / self.heads
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.hidden_dim == 0 || self.heads == 0 || self.ffn_dim == 0 || self.max_positions == 0 {
            return Err(Error::Config(format!("encoder dimensions must be positive: {self:?}")));
        }
        if self.hidden_dim % self.heads != 0 {
            return Err(Error::Config(format!(
                "hidden_dim {} is not divisible by heads {}",
                self.hidden_dim, self.heads
            )));
        }
        if self.vocab_size <= specials::COUNT {
            return Err(Error::Config(format!("vocab size {} leaves no ordinary tokens", self.vocab_size)));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        Layout::new(self).total
    }
}

/// Parameter ranges of one transformer block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLayout {
    pub ln1_g: Range<usize>,
    pub ln1_b: Range<usize>,
    pub wq: Range<usize>,
    pub bq: Range<usize>,
    pub wk: Range<usize>,
    pub bk: Range<usize>,
    pub wv: Range<usize>,
    pub bv: Range<usize>,
    pub wo: Range<usize>,
    pub bo: Range<usize>,
    pub ln2_g: Range<usize>,
    pub ln2_b: Range<usize>,
    pub w1: Range<usize>,
    pub b1: Range<usize>,
    pub w2: Range<usize>,
    pub b2: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub tok_emb: Range<usize>,
    pub pos_emb: Range<usize>,
    pub blocks: Vec<BlockLayout>,
    pub lnf_g: Range<usize>,
    pub lnf_b: Range<usize>,
    pub head_w: Range<usize>,
    pub head_b: Range<usize>,
    pub head_ln_g: Range<usize>,
    pub head_ln_b: Range<usize>,
    pub out_bias: Range<usize>,
    pub total: usize,
}

struct Cursor(usize);

impl Cursor {
    fn take(&mut self, n: usize) -> Range<usize> {
        let r = self.0..self.0 + n;
        self.0 += n;
        r
    }
}

impl Layout {
    pub fn new(c: &EncoderConfig) -> Self {
        let (d, f) = (c.hidden_dim, c.ffn_dim);
        let mut cur = Cursor(0);
        let tok_emb = cur.take(c.vocab_size * d);
        let pos_emb = cur.take(c.max_positions * d);
        let blocks = (0..c.layers)
            .map(|_| BlockLayout {
                ln1_g: cur.take(d),
                ln1_b: cur.take(d),
                wq: cur.take(d * d),
                bq: cur.take(d),
                wk: cur.take(d * d),
                bk: cur.take(d),
                wv: cur.take(d * d),
                bv: cur.take(d),
                wo: cur.take(d * d),
                bo: cur.take(d),
                ln2_g: cur.take(d),
                ln2_b: cur.take(d),
                w1: cur.take(d * f),
                b1: cur.take(f),
                w2: cur.take(f * d),
                b2: cur.take(d),
            })
            .collect();
        let lnf_g = cur.take(d);
        let lnf_b = cur.take(d);
        let head_w = cur.take(d * d);
        let head_b = cur.take(d);
        let head_ln_g = cur.take(d);
        let head_ln_b = cur.take(d);
        let out_bias = cur.take(c.vocab_size);
        Self { tok_emb, pos_emb, blocks, lnf_g, lnf_b, head_w, head_b, head_ln_g, head_ln_b, out_bias, total: cur.0 }
    }

    fn gains(&self) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        for b in &self.blocks {
            out.push(b.ln1_g.clone());
            out.push(b.ln2_g.clone());
        }
        out.push(self.lnf_g.clone());
        out.push(self.head_ln_g.clone());
        out
    }

    fn weights(&self) -> Vec<Range<usize>> {
        let mut out = alloc::vec![self.tok_emb.clone(), self.pos_emb.clone()];
        for b in &self.blocks {
            out.extend([b.wq.clone(), b.wk.clone(), b.wv.clone(), b.wo.clone(), b.w1.clone(), b.w2.clone()]);
        }
        out.push(self.head_w.clone());
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Encoder<F> {
    pub config: EncoderConfig,
    pub layout: Layout,
    pub params: Vec<F>,
}

impl<F: Scalar> Encoder<F> {
    /// Weights and embeddings ~ N(0, 0.02²), biases zero, norm gains one.
    pub fn init(config: EncoderConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config);
        let mut params = alloc::vec![F::zero(); layout.total];
        let mut rng = rng::seeded(rng::derive(seed, &[0x1417]));
        for r in layout.weights() {
            for p in &mut params[r] {
                *p = F::of(rng::normal(&mut rng, 0.0, INIT_STD));
            }
        }
        for r in layout.gains() {
            params[r].fill(F::one());
        }
        Ok(Self { config, layout, params })
    }

    pub fn from_params(config: EncoderConfig, params: Vec<F>) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config);
        if params.len() != layout.total {
            return Err(Error::Config(format!(
                "expected {} parameters for {config:?}, got {}",
                layout.total,
                params.len()
            )));
        }
        Ok(Self { config, layout, params })
    }

    pub fn cast<G: Scalar>(&self) -> Encoder<G> {
        Encoder {
            config: self.config,
            layout: self.layout.clone(),
            params: self.params.iter().map(|&p| G::of(p.f64())).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent hand count: embeddings, per-block attention (4 d×d + 4 d
    /// biases), FFN (2 d·f + f + d), two LNs per block, final LN, MLM head
    /// (dense d×d + d, LN 2d, output bias V); output projection tied.
    fn hand_count(v: usize, p: usize, l: usize, d: usize, f: usize) -> usize {
        let emb = v * d + p * d;
        let block = 4 * d * d + 4 * d + 2 * d * f + f + d + 2 * 2 * d;
        emb + l * block + 2 * d + (d * d + d + 2 * d + v)
    }

    #[test]
    fn toy_param_count_matches_hand_count() {
        let c = EncoderConfig::toy(1000, 128);
        assert_eq!(c.param_count(), hand_count(1000, 128, 2, 64, 256));
        assert_eq!(c.param_count(), 1000 * 64 + 128 * 64 + 2 * 49_984 + 128 + 4_160 + 128 + 1000);
    }

    #[test]
    fn size_classes_land_near_published_sizes() {
        let m = |s| EncoderConfig::for_size(s, 50_000, 514).param_count() as f64 / 1e6;
        assert!((m(SizeClass::Medium) - 51.0).abs() < 1.0, "{}", m(SizeClass::Medium));
        assert!((m(SizeClass::Base) - 124.0).abs() < 1.5, "{}", m(SizeClass::Base));
        assert!((m(SizeClass::Large) - 355.0).abs() < 2.0, "{}", m(SizeClass::Large));
    }

    #[test]
    fn init_is_deterministic_and_validated() {
        let c = EncoderConfig::toy(100, 16);
        let a = Encoder::<f32>::init(c, 3).unwrap();
        let b = Encoder::<f32>::init(c, 3).unwrap();
        assert!(a.params.iter().zip(&b.params).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_ne!(a.params, Encoder::<f32>::init(c, 4).unwrap().params);
        let bad = EncoderConfig { heads: 5, ..c };
        assert!(matches!(Encoder::<f32>::init(bad, 0), Err(Error::Config(_))));
    }

    #[test]
    fn init_statistics() {
        let e = Encoder::<f64>::init(EncoderConfig::toy(500, 64), 1).unwrap();
        let w = &e.params[e.layout.tok_emb.clone()];
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let std = libm::sqrt(w.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / w.len() as f64);
        assert!((std - INIT_STD).abs() < 0.001);
        assert!(e.params[e.layout.lnf_g.clone()].iter().all(|&g| g == 1.0));
        assert!(e.params[e.layout.out_bias.clone()].iter().all(|&b| b == 0.0));
    }
}
