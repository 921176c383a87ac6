use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::train::{train_step, TrainConfig, TrainState};
use super::{Encoder, EncoderConfig};
use crate::error::{Error, Result};
use crate::packing::{mask_sequences, MaskingConfig, PackedSequence};
use crate::rng;

/// Global gradient norm above which a run counts as exploded.
pub const EXPLOSION_GRAD_NORM: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeOutcome {
    Stable,
    Exploded,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeConfig {
    pub budget_steps: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub masking: MaskingConfig,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { budget_steps: 40, batch_size: 8, seed: 0, masking: MaskingConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub regime: String,
    pub lr: f64,
    pub outcome: ProbeOutcome,
    pub steps_run: usize,
    pub max_grad_norm: f64,
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub records: Vec<ProbeRecord>,
    /// Largest stable rate per regime, `None` if every rate exploded.
    pub max_stable_lr: Vec<(String, Option<f64>)>,
}

impl StabilityReport {
    pub fn outcome(&self, regime: &str, lr: f64) -> Option<ProbeOutcome> {
        self.records.iter().find(|r| r.regime == regime && r.lr == lr).map(|r| r.outcome)
    }
}

/// Runs `budget_steps` constant-rate steps per (regime, lr) from the same
/// initialization and classifies each run.
pub fn lr_stability_probe(
    config: &EncoderConfig,
    regimes: &[(String, &[PackedSequence])],
    lr_grid: &[f64],
    probe: &ProbeConfig,
) -> Result<StabilityReport> {
    if lr_grid.is_empty() {
        return Err(Error::Argument(format!("learning-rate grid is empty")));
    }
    if lr_grid.windows(2).any(|w| !(w[0] > w[1])) || lr_grid.iter().any(|&lr| !(lr > 0.0)) {
        return Err(Error::Argument(format!("learning-rate grid must be positive and strictly descending: {lr_grid:?}")));
    }
    if probe.batch_size == 0 || probe.budget_steps == 0 {
        return Err(Error::Argument(format!("probe needs a positive batch size and step budget")));
    }
    let init = Encoder::<f32>::init(*config, probe.seed)?;
    let mut records = Vec::new();
    let mut max_stable_lr = Vec::new();
    for (name, data) in regimes {
        if data.is_empty() {
            return Err(Error::Precondition(format!("regime `{name}` has no sequences")));
        }
        let mut best = None;
        for &lr in lr_grid {
            let record = probe_one(&init, name, data, lr, probe)?;
            if record.outcome == ProbeOutcome::Stable && best.is_none() {
                best = Some(lr);
            }
            records.push(record);
        }
        max_stable_lr.push((name.clone(), best));
    }
    Ok(StabilityReport { records, max_stable_lr })
}

fn probe_one(init: &Encoder<f32>, regime: &str, data: &[PackedSequence], lr: f64, probe: &ProbeConfig) -> Result<ProbeRecord> {
    let train_config = TrainConfig { peak_lr: lr, batch_size: probe.batch_size, masking: probe.masking, ..TrainConfig::default() };
    let mut state = TrainState::new(init.clone(), lr, 0, 0);
    let mut max_grad_norm = 0.0f64;
    let mut final_loss = f64::NAN;
    let mut outcome = ProbeOutcome::Stable;
    let mut steps_run = 0;
    for step in 0..probe.budget_steps {
        let start = (step * probe.batch_size) % data.len();
        let seqs: Vec<PackedSequence> = (0..probe.batch_size).map(|k| data[(start + k) % data.len()].clone()).collect();
        let batch = mask_sequences(&seqs, &probe.masking, rng::derive(probe.seed, &[7, step as u64]), init.config.vocab_size)?;
        let out = train_step(&mut state, &batch, &train_config)?;
        steps_run += 1;
        final_loss = out.loss;
        max_grad_norm = if out.grad_norm.is_nan() { f64::NAN } else { libm::fmax(max_grad_norm, out.grad_norm) };
        if state.exploded || !(out.grad_norm <= EXPLOSION_GRAD_NORM) {
            outcome = ProbeOutcome::Exploded;
            break;
        }
    }
    Ok(ProbeRecord { regime: String::from(regime), lr, outcome, steps_run, max_grad_norm, final_loss })
}
