use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::metrics::{accuracy, micro_f1};
use super::{Metric, TaskExample, TaskInput, TaskKind};
use crate::encoder::ops::{cross_entropy, Scalar};
use crate::encoder::{backward_hidden, forward_hidden, lr_at, AdamW, Encoder, SizeClass, TrainConfig, INIT_STD};
use crate::error::{Error, Result};
use crate::rng;
use crate::tokenizer::{specials, SubwordTokenizer, TokenId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinetuneConfig {
    /// Configured peak rate; halved for the large size class.
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Input length cap, defaults to the encoder's `max_positions`.
    pub max_len: Option<usize>,
    pub warmup_fraction: f64,
    pub weight_decay: f64,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        Self { lr: 1e-3, epochs: 3, batch_size: 16, seed: 1, max_len: None, warmup_fraction: 0.06, weight_decay: 0.01 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinetuneLogEntry {
    pub epoch: usize,
    pub steps: usize,
    pub mean_loss: f64,
    pub effective_lr: f64,
}

/// Encoder plus a linear head over the label set.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskModel {
    pub encoder: Encoder<f32>,
    /// `hidden_dim × labels.len()`.
    pub head_w: Vec<f32>,
    pub head_b: Vec<f32>,
    /// Sorted, unique labels seen in training.
    pub labels: Vec<String>,
    pub kind: TaskKind,
    pub max_len: usize,
    pub effective_lr: f64,
    pub log: Vec<FinetuneLogEntry>,
}

/// Token ids plus, per label slot, the position whose hidden state is
/// classified (`None` when the slot was truncated away).
struct Encoded {
    ids: Vec<TokenId>,
    slots: Vec<Option<usize>>,
}

fn encode_input(tok: &SubwordTokenizer, input: &TaskInput, max_len: usize) -> Encoded {
    match input {
        TaskInput::Text { text, .. } => {
            let mut body = tok.encode(text);
            body.truncate(max_len.saturating_sub(2));
            let mut ids = vec![specials::BOS];
            ids.extend(body);
            ids.push(specials::EOS);
            Encoded { ids, slots: vec![Some(0)] }
        }
        TaskInput::Pair { text, text_pair, .. } => {
            let mut a = tok.encode(text);
            let mut b = tok.encode(text_pair);
            let room = max_len.saturating_sub(3);
            while a.len() + b.len() > room {
                if a.len() >= b.len() {
                    a.pop();
                } else {
                    b.pop();
                }
            }
            let mut ids = vec![specials::BOS];
            ids.extend(a);
            ids.push(specials::EOS);
            ids.extend(b);
            ids.push(specials::EOS);
            Encoded { ids, slots: vec![Some(0)] }
        }
        TaskInput::Tokens { tokens, .. } => {
            let mut ids = vec![specials::BOS];
            let mut slots = Vec::with_capacity(tokens.len());
            let mut full = false;
            for (i, word) in tokens.iter().enumerate() {
                let piece = if i == 0 { tok.encode(word) } else { tok.encode(&format!(" {word}")) };
                if full || piece.is_empty() || ids.len() + piece.len() + 1 > max_len {
                    full |= !piece.is_empty();
                    slots.push(None);
                    continue;
                }
                slots.push(Some(ids.len()));
                ids.extend(piece);
            }
            ids.push(specials::EOS);
            Encoded { ids, slots }
        }
    }
}

fn head_logits(model: &TaskModel, hidden: &[f32], pos: usize) -> Vec<f32> {
    let d = model.encoder.config.hidden_dim;
    let c = model.labels.len();
    let h = &hidden[pos * d..(pos + 1) * d];
    let mut out = model.head_b.clone();
    for (j, &hj) in h.iter().enumerate() {
        let row = &model.head_w[j * c..(j + 1) * c];
        for (o, &w) in out.iter_mut().zip(row) {
            *o += hj * w;
        }
    }
    out
}

fn label_index(labels: &[String], label: &str) -> Option<usize> {
    labels.binary_search_by(|l| l.as_str().cmp(label)).ok()
}

/// Adds a linear head and trains encoder and head jointly with AdamW under
/// the warmup/linear-decay schedule. Sequence and pair tasks classify the
/// `<s>` position; token tasks classify each word's first subword.
pub fn finetune(
    checkpoint: &Encoder<f32>,
    tokenizer: &SubwordTokenizer,
    kind: TaskKind,
    train: &[TaskExample],
    config: &FinetuneConfig,
) -> Result<TaskModel> {
    if tokenizer.vocab_size() != checkpoint.config.vocab_size {
        return Err(Error::Precondition(format!(
            "tokenizer vocabulary {} does not match checkpoint vocabulary {}",
            tokenizer.vocab_size(),
            checkpoint.config.vocab_size
        )));
    }
    if config.batch_size == 0 || !(config.lr >= 0.0) {
        return Err(Error::Argument(format!("batch_size must be positive and lr non-negative")));
    }
    if let Some(bad) = train.iter().position(|e| e.kind() != kind) {
        return Err(Error::TaskSpec(format!("training example {bad} is not a {kind:?} example")));
    }
    let mut labels: Vec<String> = train.iter().flat_map(|e| e.gold_labels()).map(String::from).collect();
    labels.sort();
    labels.dedup();
    if labels.is_empty() {
        return Err(Error::TaskSpec(format!("training split has an empty label set")));
    }

    let max_len = config.max_len.unwrap_or(checkpoint.config.max_positions).min(checkpoint.config.max_positions);
    if max_len < 3 {
        return Err(Error::Argument(format!("max_len {max_len} leaves no room for input tokens")));
    }
    let effective_lr = if checkpoint.config.size_class == SizeClass::Large { config.lr / 2.0 } else { config.lr };
    let d = checkpoint.config.hidden_dim;
    let c = labels.len();
    let mut init_rng = rng::seeded(rng::derive(config.seed, &[0x4ead]));
    let head_w = (0..d * c).map(|_| rng::normal(&mut init_rng, 0.0, INIT_STD) as f32).collect();
    let mut model = TaskModel {
        encoder: checkpoint.clone(),
        head_w,
        head_b: vec![0.0; c],
        labels,
        kind,
        max_len,
        effective_lr,
        log: Vec::new(),
    };

    let data: Vec<(Encoded, Vec<usize>)> = train
        .iter()
        .map(|e| {
            let gold = e.gold_labels().iter().map(|l| label_index(&model.labels, l).expect("label from train")).collect();
            (encode_input(tokenizer, &e.input, max_len), gold)
        })
        .collect();

    let steps_per_epoch = data.len().div_ceil(config.batch_size);
    let total = steps_per_epoch * config.epochs;
    let warmup = libm::ceil(config.warmup_fraction * total as f64) as usize;
    let opt_config = TrainConfig { weight_decay: config.weight_decay, ..TrainConfig::default() };
    let n_enc = model.encoder.params.len();
    let mut enc_opt = AdamW::<f32>::new(n_enc);
    let mut head_opt = AdamW::<f32>::new(d * c + c);
    let mut enc_grads = vec![0.0f32; n_enc];
    let mut head_grads = vec![0.0f32; d * c + c];
    let mut probs = vec![0.0f32; c];
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut step = 0;

    for epoch in 1..=config.epochs {
        order.sort_unstable();
        order.shuffle(&mut rng::seeded(rng::derive(config.seed, &[1, epoch as u64])));
        let mut epoch_loss = 0.0;
        let mut epoch_count = 0usize;
        for batch in order.chunks(config.batch_size) {
            enc_grads.fill(0.0);
            head_grads.fill(0.0);
            let mut loss = 0.0f64;
            let mut count = 0usize;
            for &i in batch {
                let (enc, gold) = &data[i];
                let cache = forward_hidden(&model.encoder, &enc.ids)?;
                let mut d_hidden = vec![0.0f32; cache.hidden.len()];
                for (slot, &target) in enc.slots.iter().zip(gold) {
                    let Some(pos) = *slot else { continue };
                    let logits = head_logits(&model, &cache.hidden, pos);
                    loss += cross_entropy(&logits, target, &mut probs).f64();
                    count += 1;
                    probs[target] -= 1.0;
                    let h = &cache.hidden[pos * d..(pos + 1) * d];
                    let dh = &mut d_hidden[pos * d..(pos + 1) * d];
                    for j in 0..d {
                        let row = &model.head_w[j * c..(j + 1) * c];
                        let grow = &mut head_grads[j * c..(j + 1) * c];
                        for k in 0..c {
                            grow[k] += h[j] * probs[k];
                            dh[j] += row[k] * probs[k];
                        }
                    }
                    for k in 0..c {
                        head_grads[d * c + k] += probs[k];
                    }
                }
                backward_hidden(&model.encoder, &cache, &d_hidden, &mut enc_grads);
            }
            let lr = lr_at(step, total, warmup, effective_lr);
            step += 1;
            if count == 0 {
                continue;
            }
            if !loss.is_finite() {
                return Err(Error::Training(format!("non-finite fine-tuning loss at epoch {epoch}")));
            }
            let scale = 1.0 / count as f64;
            enc_opt.update(&mut model.encoder.params, &enc_grads, lr, scale, &opt_config);
            let mut head: Vec<f32> = model.head_w.iter().chain(&model.head_b).copied().collect();
            head_opt.update(&mut head, &head_grads, lr, scale, &opt_config);
            model.head_b.copy_from_slice(&head[d * c..]);
            head.truncate(d * c);
            model.head_w = head;
            epoch_loss += loss;
            epoch_count += count;
        }
        model.log.push(FinetuneLogEntry {
            epoch,
            steps: step,
            mean_loss: if epoch_count == 0 { 0.0 } else { epoch_loss / epoch_count as f64 },
            effective_lr,
        });
    }
    Ok(model)
}

/// One predicted label per gold slot; truncated token slots get `null_label`.
pub fn predict(model: &TaskModel, tokenizer: &SubwordTokenizer, example: &TaskExample, null_label: &str) -> Result<Vec<String>> {
    if example.kind() != model.kind {
        return Err(Error::Evaluation(format!("example is not a {:?} example", model.kind)));
    }
    let enc = encode_input(tokenizer, &example.input, model.max_len);
    let cache = forward_hidden(&model.encoder, &enc.ids)?;
    Ok(enc
        .slots
        .iter()
        .map(|slot| match slot {
            Some(pos) => {
                let logits = head_logits(model, &cache.hidden, *pos);
                let best = (1..logits.len()).fold(0, |b, k| if logits[k] > logits[b] { k } else { b });
                model.labels[best].clone()
            }
            None => String::from(null_label),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub score: f64,
    pub predictions: Vec<Vec<String>>,
}

pub fn evaluate(
    model: &TaskModel,
    tokenizer: &SubwordTokenizer,
    test: &[TaskExample],
    metric: Metric,
    null_label: &str,
) -> Result<Evaluation> {
    if test.is_empty() {
        return Err(Error::Evaluation(format!("test split is empty")));
    }
    let mut gold = Vec::new();
    let mut pred = Vec::new();
    let mut predictions = Vec::with_capacity(test.len());
    for (i, ex) in test.iter().enumerate() {
        for g in ex.gold_labels() {
            if label_index(&model.labels, g).is_none() && g != null_label {
                return Err(Error::Evaluation(format!("test example {i} has label `{g}` unseen in training")));
            }
            gold.push(String::from(g));
        }
        let p = predict(model, tokenizer, ex, null_label)?;
        pred.extend(p.iter().cloned());
        predictions.push(p);
    }
    let score = match metric {
        Metric::Accuracy => accuracy(&gold, &pred)?,
        Metric::MicroF1 => micro_f1(&gold, &pred, &String::from(null_label))?,
    };
    Ok(Evaluation { score, predictions })
}
