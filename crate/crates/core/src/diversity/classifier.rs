//! Sentence-level standard / non-standard classifiers.
//!
//! Two reference models are provided behind the [`SentenceClassifier`]
//! trait: an out-of-lexicon word ratio and a logistic model over character
//! 3-5-grams. Both map a sentence to a score in `[0, 1]`; a score at or above
//! the threshold means non-standard.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::text::{lexical_form, words};

/// Serialization format version of [`VarietyClassifier`].
pub const CLASSIFIER_FORMAT_VERSION: u32 = 1;

pub const MIN_TRAINING_SENTENCES: usize = 20;

const NGRAM_MIN: usize = 3;
const NGRAM_MAX: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarietyLabel {
    Standard,
    Nonstandard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    LexiconRatio,
    CharNgramLinear,
}

impl ClassifierKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lexicon_ratio" => Ok(Self::LexiconRatio),
            "char_ngram_linear" => Ok(Self::CharNgramLinear),
            other => Err(Error::Argument(format!("unknown classifier kind `{other}`"))),
        }
    }
}

/// Anything that can score a sentence for non-standardness.
pub trait SentenceClassifier {
    /// Score in `[0, 1]`; higher is less standard.
    fn score(&self, sentence: &str) -> f64;

    fn threshold(&self) -> f64;

    fn classify(&self, sentence: &str) -> VarietyLabel {
        if self.score(sentence) >= self.threshold() {
            VarietyLabel::Nonstandard
        } else {
            VarietyLabel::Standard
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierModel {
    LexiconRatio { lexicon: BTreeSet<String> },
    CharNgramLinear { bias: f64, weights: BTreeMap<String, f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarietyClassifier {
    pub format_version: u32,
    pub threshold: f64,
    pub model: ClassifierModel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierTrainConfig {
    pub threshold: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    /// N-grams seen fewer times than this in training get no weight.
    pub min_count: usize,
}

impl Default for ClassifierTrainConfig {
    fn default() -> Self {
        Self { threshold: 0.5, epochs: 8, learning_rate: 0.5, min_count: 2 }
    }
}

impl VarietyClassifier {
    pub fn lexicon_ratio<I, S>(lexicon: I, threshold: f64) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        check_threshold(threshold)?;
        let lexicon = lexicon.into_iter().map(|w| lexical_form(w.as_ref())).filter(|w| !w.is_empty()).collect();
        Ok(Self {
            format_version: CLASSIFIER_FORMAT_VERSION,
            threshold,
            model: ClassifierModel::LexiconRatio { lexicon },
        })
    }

    pub fn kind(&self) -> ClassifierKind {
        match self.model {
            ClassifierModel::LexiconRatio { .. } => ClassifierKind::LexiconRatio,
            ClassifierModel::CharNgramLinear { .. } => ClassifierKind::CharNgramLinear,
        }
    }
}

impl SentenceClassifier for VarietyClassifier {
    fn score(&self, sentence: &str) -> f64 {
        match &self.model {
            ClassifierModel::LexiconRatio { lexicon } => {
                let mut total = 0usize;
                let mut outside = 0usize;
                for w in words(sentence) {
                    let form = lexical_form(w);
                    if form.is_empty() {
                        continue;
                    }
                    total += 1;
                    if !lexicon.contains(&form) {
                        outside += 1;
                    }
                }
                if total == 0 {
                    0.0
                } else {
                    outside as f64 / total as f64
                }
            }
            ClassifierModel::CharNgramLinear { bias, weights } => {
                let feats = ngram_features(sentence);
                let z = bias + feats.iter().filter_map(|(g, x)| weights.get(g).map(|w| w * x)).sum::<f64>();
                sigmoid(z)
            }
        }
    }

    fn threshold(&self) -> f64 {
        self.threshold
    }
}

fn check_threshold(t: f64) -> Result<()> {
    if t > 0.0 && t < 1.0 {
        Ok(())
    } else {
        Err(Error::Argument(format!("classifier threshold must lie in (0, 1), got {t}")))
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// L2-normalized character 3-5-gram counts of the lowercased,
/// whitespace-collapsed sentence padded with one space on each side.
pub fn ngram_features(sentence: &str) -> Vec<(String, f64)> {
    let mut padded: Vec<char> = Vec::with_capacity(sentence.len() + 2);
    padded.push(' ');
    for (i, w) in words(sentence).enumerate() {
        if i > 0 {
            padded.push(' ');
        }
        padded.extend(w.chars().flat_map(char::to_lowercase));
    }
    padded.push(' ');

    let mut counts: BTreeMap<String, f64> = BTreeMap::new();
    for n in NGRAM_MIN..=NGRAM_MAX {
        if padded.len() < n {
            break;
        }
        for window in padded.windows(n) {
            *counts.entry(window.iter().collect()).or_insert(0.0) += 1.0;
        }
    }
    let norm = libm::sqrt(counts.values().map(|c| c * c).sum::<f64>());
    if norm > 0.0 {
        counts.values_mut().for_each(|c| *c /= norm);
    }
    counts.into_iter().collect()
}

pub fn train_variety_classifier<S: AsRef<str>>(
    labeled: &[(S, VarietyLabel)],
    kind: ClassifierKind,
    seed: u64,
) -> Result<VarietyClassifier> {
    train_variety_classifier_with(labeled, kind, seed, &ClassifierTrainConfig::default())
}

pub fn train_variety_classifier_with<S: AsRef<str>>(
    labeled: &[(S, VarietyLabel)],
    kind: ClassifierKind,
    seed: u64,
    config: &ClassifierTrainConfig,
) -> Result<VarietyClassifier> {
    check_threshold(config.threshold)?;
    if labeled.len() < MIN_TRAINING_SENTENCES {
        return Err(Error::Precondition(format!(
            "need at least {MIN_TRAINING_SENTENCES} labeled sentences, got {}",
            labeled.len()
        )));
    }
    let has = |l: VarietyLabel| labeled.iter().any(|(_, x)| *x == l);
    if !has(VarietyLabel::Standard) || !has(VarietyLabel::Nonstandard) {
        return Err(Error::Training(String::from("training data must contain both standard and non-standard sentences")));
    }

    match kind {
        ClassifierKind::LexiconRatio => {
            let lexicon = labeled
                .iter()
                .filter(|(_, l)| *l == VarietyLabel::Standard)
                .flat_map(|(s, _)| words(s.as_ref()))
                .collect::<Vec<_>>();
            VarietyClassifier::lexicon_ratio(lexicon, config.threshold)
        }
        ClassifierKind::CharNgramLinear => train_ngram_logistic(labeled, seed, config),
    }
}

fn train_ngram_logistic<S: AsRef<str>>(
    labeled: &[(S, VarietyLabel)],
    seed: u64,
    config: &ClassifierTrainConfig,
) -> Result<VarietyClassifier> {
    // Feature vocabulary, sorted, so weights live in a dense vector.
    let mut doc_freq: BTreeMap<String, usize> = BTreeMap::new();
    let examples: Vec<(Vec<(String, f64)>, f64)> = labeled
        .iter()
        .map(|(s, l)| {
            let feats = ngram_features(s.as_ref());
            for (g, _) in &feats {
                *doc_freq.entry(g.clone()).or_insert(0) += 1;
            }
            (feats, if *l == VarietyLabel::Nonstandard { 1.0 } else { 0.0 })
        })
        .collect();
    let index: BTreeMap<String, usize> = doc_freq
        .into_iter()
        .filter(|(_, c)| *c >= config.min_count)
        .enumerate()
        .map(|(i, (g, _))| (g, i))
        .collect();
    let dense: Vec<(Vec<(usize, f64)>, f64)> = examples
        .into_iter()
        .map(|(feats, y)| {
            let f = feats.into_iter().filter_map(|(g, x)| index.get(&g).map(|&i| (i, x))).collect();
            (f, y)
        })
        .collect();

    let mut weights = alloc::vec![0.0f64; index.len()];
    let mut bias = 0.0f64;
    let mut order: Vec<usize> = (0..dense.len()).collect();
    let mut rng = rng::seeded(seed);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let lr = config.learning_rate / (1.0 + epoch as f64);
        for &i in &order {
            let (feats, y) = &dense[i];
            let z = bias + feats.iter().map(|&(j, x)| weights[j] * x).sum::<f64>();
            let err = sigmoid(z) - y;
            bias -= lr * err;
            for &(j, x) in feats {
                weights[j] -= lr * err * x;
            }
        }
    }
    if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Training(String::from("classifier weights diverged")));
    }

    let weights = index.into_iter().filter_map(|(g, i)| (weights[i] != 0.0).then(|| (g, weights[i]))).collect();
    Ok(VarietyClassifier {
        format_version: CLASSIFIER_FORMAT_VERSION,
        threshold: config.threshold,
        model: ClassifierModel::CharNgramLinear { bias, weights },
    })
}
