use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::model::{forward_mlm, mlm_loss_and_grad};
use super::ops::Scalar;
use super::Encoder;
use crate::error::{Error, Result};
use crate::packing::{mask_sequences, MaskedBatch, MaskingConfig, PackedSequence};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub peak_lr: f64,
    pub batch_size: usize,
    /// Share of all steps spent in linear warmup.
    pub warmup_fraction: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Global-norm clipping; off by default so instabilities stay visible.
    pub clip_norm: Option<f64>,
    pub masking: MaskingConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 5,
            peak_lr: 1e-3,
            batch_size: 16,
            warmup_fraction: 0.06,
            weight_decay: 0.01,
            beta1: 0.9,
            beta2: 0.98,
            eps: 1e-6,
            clip_norm: None,
            masking: MaskingConfig::default(),
            seed: 0,
        }
    }
}

/// Learning rate for 0-based `step`: linear warmup to `peak` over
/// `warmup` steps, then linear decay reaching zero after `total` steps.
/// `total == 0` means a constant rate.
pub fn lr_at(step: usize, total: usize, warmup: usize, peak: f64) -> f64 {
    if total == 0 {
        return peak;
    }
    if step < warmup {
        return peak * (step + 1) as f64 / warmup as f64;
    }
    if total <= warmup {
        return peak;
    }
    peak * total.saturating_sub(step) as f64 / (total - warmup) as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainState<F> {
    pub step: usize,
    pub encoder: Encoder<F>,
    pub optimizer: AdamW<F>,
    pub peak_lr: f64,
    pub total_steps: usize,
    pub warmup_steps: usize,
    /// Rate used by the most recent step.
    pub lr: f64,
    pub grad_norm_history: Vec<f64>,
    pub train_loss_history: Vec<f64>,
    /// `(epoch, loss)`, epochs counted from 1.
    pub val_loss_history: Vec<(usize, f64)>,
    pub exploded: bool,
}

impl<F: Scalar> TrainState<F> {
    pub fn new(encoder: Encoder<F>, peak_lr: f64, total_steps: usize, warmup_steps: usize) -> Self {
        let optimizer = AdamW::new(encoder.params.len());
        Self {
            step: 0,
            encoder,
            optimizer,
            peak_lr,
            total_steps,
            warmup_steps,
            lr: lr_at(0, total_steps, warmup_steps, peak_lr),
            grad_norm_history: Vec::new(),
            train_loss_history: Vec::new(),
            val_loss_history: Vec::new(),
            exploded: false,
        }
    }
}

/// Adam moments with decoupled weight decay.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamW<F> {
    pub m: Vec<F>,
    pub v: Vec<F>,
    /// Updates applied so far (for bias correction).
    pub t: usize,
}

impl<F: Scalar> AdamW<F> {
    pub fn new(n: usize) -> Self {
        Self { m: vec![F::zero(); n], v: vec![F::zero(); n], t: 0 }
    }

    /// Applies one update with gradients multiplied by `grad_scale`.
    pub fn update(&mut self, params: &mut [F], grads: &[F], lr: f64, grad_scale: f64, config: &TrainConfig) {
        self.t += 1;
        let (b1, b2) = (config.beta1, config.beta2);
        let bc1 = 1.0 - libm::pow(b1, self.t as f64);
        let bc2 = 1.0 - libm::pow(b2, self.t as f64);
        let (b1f, b2f) = (F::of(b1), F::of(b2));
        let (one_b1, one_b2) = (F::of(1.0 - b1), F::of(1.0 - b2));
        let step_size = F::of(lr / bc1);
        let inv_bc2 = F::of(1.0 / bc2);
        let eps = F::of(config.eps);
        let decay = F::of(lr * config.weight_decay);
        let scale = F::of(grad_scale);
        for i in 0..params.len() {
            let g = grads[i] * scale;
            self.m[i] = b1f * self.m[i] + one_b1 * g;
            self.v[i] = b2f * self.v[i] + one_b2 * g * g;
            let denom = (self.v[i] * inv_bc2).sqrt() + eps;
            let p = params[i];
            params[i] = p - (step_size * self.m[i] / denom + decay * p);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub loss: f64,
    /// Global gradient norm before any clipping.
    pub grad_norm: f64,
    pub lr: f64,
    pub applied: bool,
}

/// One AdamW step (decoupled weight decay) on the mean masked loss of
/// `batch`. A non-finite loss or gradient aborts the step and marks the
/// state exploded.
pub fn train_step<F: Scalar>(state: &mut TrainState<F>, batch: &MaskedBatch, config: &TrainConfig) -> Result<StepOutcome> {
    let mut grads = vec![F::zero(); state.encoder.params.len()];
    let (loss, _) = mlm_loss_and_grad(&state.encoder, batch, &mut grads)?;
    let grad_norm = libm::sqrt(grads.iter().map(|g| g.f64() * g.f64()).sum::<f64>());
    state.grad_norm_history.push(grad_norm);
    state.train_loss_history.push(loss);
    let lr = lr_at(state.step, state.total_steps, state.warmup_steps, state.peak_lr);
    if !loss.is_finite() || !grad_norm.is_finite() {
        state.exploded = true;
        return Ok(StepOutcome { loss, grad_norm, lr, applied: false });
    }
    let clip = match config.clip_norm {
        Some(c) if grad_norm > c => c / grad_norm,
        _ => 1.0,
    };

    state.optimizer.update(&mut state.encoder.params, &grads, lr, clip, config);
    state.step += 1;
    state.lr = lr;
    if !state.encoder.is_finite() {
        state.exploded = true;
    }
    Ok(StepOutcome { loss, grad_norm, lr, applied: true })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<F> {
    pub epoch: usize,
    pub step: usize,
    pub val_loss: f64,
    pub encoder: Encoder<F>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome<F> {
    pub checkpoints: Vec<Checkpoint<F>>,
    pub state: TrainState<F>,
}

/// Mean masked loss over `seqs` under a mask fixed by `seed`.
pub fn validation_loss<F: Scalar>(encoder: &Encoder<F>, seqs: &[PackedSequence], masking: &MaskingConfig, seed: u64) -> Result<f64> {
    let batch = mask_sequences(seqs, masking, seed, encoder.config.vocab_size)?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for row in batch.rows {
        let one = MaskedBatch { rows: vec![row] };
        let out = forward_mlm(encoder, &one)?;
        sum += out.loss * out.masked as f64;
        count += out.masked;
    }
    Ok(if count == 0 { 0.0 } else { sum / count as f64 })
}

/// Trains for `config.epochs` epochs with per-epoch reshuffling and fresh
/// masks, recording a checkpoint and validation loss after each epoch.
/// On explosion, returns what was collected so far with `state.exploded`.
pub fn train<F: Scalar>(
    encoder: Encoder<F>,
    data: &[PackedSequence],
    validation: &[PackedSequence],
    config: &TrainConfig,
) -> Result<TrainOutcome<F>> {
    if data.is_empty() {
        return Err(Error::Precondition(format!("training data is empty")));
    }
    if validation.is_empty() {
        return Err(Error::Precondition(format!("validation split is empty")));
    }
    if config.batch_size == 0 {
        return Err(Error::Config(format!("batch size must be positive")));
    }
    let per_epoch = data.len().div_ceil(config.batch_size);
    let total = per_epoch * config.epochs;
    let warmup = libm::ceil(total as f64 * config.warmup_fraction) as usize;
    let vocab = encoder.config.vocab_size;
    let mut state = TrainState::new(encoder, config.peak_lr, total, warmup);
    let val_seed = rng::derive(config.seed, &[3]);
    let mut checkpoints = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut rng::seeded(rng::derive(config.seed, &[1, epoch as u64])));
        for (b, idx) in order.chunks(config.batch_size).enumerate() {
            let seqs: Vec<PackedSequence> = idx.iter().map(|&i| data[i].clone()).collect();
            let batch = mask_sequences(&seqs, &config.masking, rng::derive(config.seed, &[2, epoch as u64, b as u64]), vocab)?;
            train_step(&mut state, &batch, config)?;
            if state.exploded {
                return Ok(TrainOutcome { checkpoints, state });
            }
        }
        let val = validation_loss(&state.encoder, validation, &config.masking, val_seed)?;
        state.val_loss_history.push((epoch, val));
        checkpoints.push(Checkpoint { epoch, step: state.step, val_loss: val, encoder: state.encoder.clone() });
    }
    Ok(TrainOutcome { checkpoints, state })
}

/// Epoch with the lowest validation loss; the earliest one wins ties.
pub fn select_best_checkpoint<F>(state: &TrainState<F>) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &(epoch, loss) in &state.val_loss_history {
        match best {
            Some((_, b)) if !(loss < b) => {}
            _ if loss.is_nan() => {}
            _ => best = Some((epoch, loss)),
        }
    }
    best.map(|(e, _)| e).ok_or_else(|| Error::Empty(format!("no validation losses recorded")))
}
