//! Seeded generators for synthetic two-variety text.
//!
//! A [`LanguageModel`] owns a lexicon of pseudo-words with Zipfian
//! frequencies. Standard sentences draw words from it directly; non-standard
//! sentences pass every word through a fixed orthographic rewrite
//! ([`rewrite_word`]). Every generator records the true label of each
//! sentence, so tests can compare measured diversity against ground truth.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::corpus::{Corpus, Document, Regime, VarietyHint};
use crate::diversity::VarietyLabel;
use crate::error::Result;
use crate::eval::TaskExample;
use crate::rng::{self, Rng};

const ONSETS: [&str; 14] = ["", "b", "d", "g", "k", "l", "m", "n", "r", "s", "t", "z", "h", "ts"];
const VOWELS: [&str; 5] = ["a", "e", "i", "o", "u"];
const CODAS: [&str; 7] = ["", "", "", "n", "r", "k", "s"];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub lexicon_size: usize,
    pub min_sentence_words: usize,
    pub max_sentence_words: usize,
    pub zipf_exponent: f64,
    /// When non-zero, every word gets this many fixed followers and each
    /// word after the first is drawn uniformly from its predecessor's
    /// followers. Zero means independent Zipf draws.
    pub successors: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { lexicon_size: 1500, min_sentence_words: 5, max_sentence_words: 12, zipf_exponent: 1.0, successors: 0 }
    }
}

impl SynthConfig {
    /// Smaller, more skewed lexicon with three followers per word: text with
    /// enough local structure for a toy encoder to learn within a few epochs.
    pub fn pretraining() -> Self {
        Self { lexicon_size: 1000, zipf_exponent: 1.3, successors: 3, ..Self::default() }
    }
}

/// The non-standard spelling of a standard word.
///
/// `z` becomes `x`, `k` becomes `kh`, `b` becomes `p`, and the ending always
/// changes (`a` → `ie`, `e` → `ia`, `i` → `ix`, `o` → `u`, `u` → `uk`,
/// consonant → consonant + `e`), so no word survives unchanged.
pub fn rewrite_word(word: &str) -> String {
    let mut out = String::with_capacity(word.len() + 3);
    for c in word.chars() {
        match c {
            'z' => out.push('x'),
            'k' => out.push_str("kh"),
            'b' => out.push('p'),
            c => out.push(c),
        }
    }
    match out.pop() {
        Some('a') => out.push_str("ie"),
        Some('e') => out.push_str("ia"),
        Some('i') => out.push_str("ix"),
        Some('o') => out.push('u'),
        Some('u') => out.push_str("uk"),
        Some(c) => {
            out.push(c);
            out.push('e');
        }
        None => {}
    }
    out
}

pub fn rewrite_sentence(sentence: &str) -> String {
    sentence
        .split(' ')
        .map(|tok| {
            let core = tok.trim_end_matches(['.', '?', '!']);
            let tail = &tok[core.len()..];
            let mut chars = core.chars();
            match chars.next() {
                Some(first) if first.is_uppercase() => {
                    let lower: String = first.to_lowercase().chain(chars).collect();
                    let rewritten = rewrite_word(&lower);
                    let mut rc = rewritten.chars();
                    let head: String = rc.next().map(|c| c.to_uppercase().collect()).unwrap_or_default();
                    format!("{head}{}{tail}", rc.as_str())
                }
                _ => format!("{}{tail}", rewrite_word(core)),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Parameters of one synthetic source.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    pub name: String,
    pub docs: usize,
    pub sentences_per_doc: usize,
    /// Fraction of all sentences in the source that are non-standard.
    pub nonstandard_proportion: f64,
}

impl SourceSpec {
    pub fn new(name: &str, docs: usize, sentences_per_doc: usize, nonstandard_proportion: f64) -> Self {
        Self { name: String::from(name), docs, sentences_per_doc, nonstandard_proportion }
    }
}

/// A generated source together with its ground truth.
#[derive(Debug, Clone)]
pub struct LabeledSource {
    pub corpus: Corpus,
    /// True label of every sentence, per document.
    pub labels: Vec<Vec<VarietyLabel>>,
}

impl LabeledSource {
    /// Mean over documents of the true non-standard sentence fraction.
    pub fn true_mean_diversity(&self) -> f64 {
        let per_doc: Vec<f64> = self
            .labels
            .iter()
            .map(|l| l.iter().filter(|x| **x == VarietyLabel::Nonstandard).count() as f64 / l.len().max(1) as f64)
            .collect();
        per_doc.iter().sum::<f64>() / per_doc.len().max(1) as f64
    }
}

#[derive(Debug, Clone)]
pub struct LanguageModel {
    config: SynthConfig,
    lexicon: Vec<String>,
    cumulative: Vec<f64>,
    followers: Vec<Vec<usize>>,
}

impl LanguageModel {
    pub fn new(config: &SynthConfig, seed: u64) -> Self {
        let mut rng = rng::seeded(rng::derive(seed, &[0x1e]));
        let mut seen = BTreeSet::new();
        let mut lexicon = Vec::with_capacity(config.lexicon_size);
        while lexicon.len() < config.lexicon_size {
            let syllables = rng.gen_range(1..=4);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push_str(ONSETS.choose(&mut rng).unwrap());
                w.push_str(VOWELS.choose(&mut rng).unwrap());
                w.push_str(CODAS.choose(&mut rng).unwrap());
            }
            if w.chars().count() >= 2 && seen.insert(w.clone()) {
                lexicon.push(w);
            }
        }
        let mut acc = 0.0;
        let cumulative = (0..lexicon.len())
            .map(|r| {
                acc += 1.0 / libm::pow(r as f64 + 1.0, config.zipf_exponent);
                acc
            })
            .collect();
        let mut model = Self { config: config.clone(), lexicon, cumulative, followers: Vec::new() };
        if config.successors > 0 {
            let mut frng = rng::seeded(rng::derive(seed, &[0xf0]));
            model.followers = (0..model.lexicon.len())
                .map(|_| (0..config.successors).map(|_| model.sample_index(&mut frng)).collect())
                .collect();
        }
        model
    }

    pub fn lexicon(&self) -> &[String] {
        &self.lexicon
    }

    fn sample_index(&self, rng: &mut Rng) -> usize {
        let total = *self.cumulative.last().unwrap();
        let x = rng.gen::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= x).min(self.lexicon.len() - 1)
    }

    pub fn sample_word(&self, rng: &mut Rng) -> &str {
        &self.lexicon[self.sample_index(rng)]
    }

    pub fn standard_sentence(&self, rng: &mut Rng) -> String {
        let n = rng.gen_range(self.config.min_sentence_words..=self.config.max_sentence_words);
        let mut s = String::new();
        let mut prev: Option<usize> = None;
        for i in 0..n {
            let idx = match prev {
                Some(p) if !self.followers.is_empty() => self.followers[p][rng.gen_range(0..self.config.successors)],
                _ => self.sample_index(rng),
            };
            prev = Some(idx);
            let w = &self.lexicon[idx];
            if i == 0 {
                let mut cs = w.chars();
                if let Some(c) = cs.next() {
                    s.extend(c.to_uppercase());
                    s.push_str(cs.as_str());
                }
            } else {
                s.push(' ');
                s.push_str(w);
            }
        }
        let end = match rng.gen_range(0..10) {
            0 => '?',
            1 => '!',
            _ => '.',
        };
        s.push(end);
        s
    }

    pub fn sentence(&self, label: VarietyLabel, rng: &mut Rng) -> String {
        let s = self.standard_sentence(rng);
        match label {
            VarietyLabel::Standard => s,
            VarietyLabel::Nonstandard => rewrite_sentence(&s),
        }
    }

    /// `n` sentences, alternating labels in a shuffled order.
    pub fn labeled_sentences(&self, n: usize, seed: u64) -> Vec<(String, VarietyLabel)> {
        let mut rng = rng::seeded(seed);
        let mut labels: Vec<VarietyLabel> = (0..n)
            .map(|i| if i % 2 == 0 { VarietyLabel::Standard } else { VarietyLabel::Nonstandard })
            .collect();
        labels.shuffle(&mut rng);
        labels.into_iter().map(|l| (self.sentence(l, &mut rng), l)).collect()
    }

    /// Generates a source with exactly `round(p * docs * sentences_per_doc)`
    /// non-standard sentences scattered uniformly over all sentence slots.
    pub fn source(&self, spec: &SourceSpec, regime: Regime, seed: u64) -> Result<LabeledSource> {
        let mut rng = rng::seeded(seed);
        let slots = spec.docs * spec.sentences_per_doc;
        let nonstandard = libm::round(spec.nonstandard_proportion * slots as f64) as usize;
        let mut flags: Vec<bool> = (0..slots).map(|i| i < nonstandard).collect();
        flags.shuffle(&mut rng);

        let hint = match regime {
            Regime::Standard => VarietyHint::Standard,
            Regime::Diverse => VarietyHint::Diverse,
            Regime::Both => VarietyHint::Unknown,
        };
        let mut documents = Vec::with_capacity(spec.docs);
        let mut labels = Vec::with_capacity(spec.docs);
        for d in 0..spec.docs {
            let mut text = String::new();
            let mut doc_labels = Vec::with_capacity(spec.sentences_per_doc);
            for s in 0..spec.sentences_per_doc {
                let label = if flags[d * spec.sentences_per_doc + s] {
                    VarietyLabel::Nonstandard
                } else {
                    VarietyLabel::Standard
                };
                if s > 0 {
                    text.push(if s % 6 == 0 { '\n' } else { ' ' });
                }
                text.push_str(&self.sentence(label, &mut rng));
                doc_labels.push(label);
            }
            documents.push(Document::new(format!("{}-{d}", spec.name), spec.name.clone(), text).with_hint(hint));
            labels.push(doc_labels);
        }
        Ok(LabeledSource { corpus: Corpus::new(spec.name.clone(), regime, documents)?, labels })
    }

    /// Short social-media style posts with authors and timestamps.
    pub fn social_posts(&self, name: &str, authors: usize, posts: usize, p: f64, seed: u64) -> Result<Corpus> {
        let mut rng = rng::seeded(seed);
        let documents = (0..posts)
            .map(|i| {
                let label = if rng.gen::<f64>() < p { VarietyLabel::Nonstandard } else { VarietyLabel::Standard };
                let n = rng.gen_range(1..=2);
                let text = (0..n).map(|_| self.sentence(label, &mut rng)).collect::<Vec<_>>().join(" ");
                Document::new(format!("{name}-{i}"), name, text)
                    .with_author(format!("user{}", rng.gen_range(0..authors)))
                    .with_timestamp(1_500_000_000 + rng.gen_range(0..10_000_000))
                    .with_hint(VarietyHint::Diverse)
            })
            .collect();
        Corpus::new(name, Regime::Diverse, documents)
    }

    /// `docs` documents whose word counts sum exactly to `total_words`.
    pub fn documents_with_word_budget(&self, name: &str, docs: usize, total_words: usize, seed: u64) -> Result<Corpus> {
        let mut rng = rng::seeded(seed);
        let base = total_words / docs.max(1);
        let extra = total_words % docs.max(1);
        let documents = (0..docs)
            .map(|d| {
                let n = base + usize::from(d < extra);
                let mut text = String::with_capacity(n * 7);
                for i in 0..n {
                    if i > 0 {
                        text.push(' ');
                    }
                    text.push_str(self.sample_word(&mut rng));
                }
                Document::new(format!("{name}-{d}"), name, text)
            })
            .collect();
        Corpus::new(name, Regime::Standard, documents)
    }
}

fn keyword_sets(lm: &LanguageModel) -> [&[String]; 2] {
    let lex = lm.lexicon();
    [&lex[lex.len() - 20..lex.len() - 10], &lex[lex.len() - 10..]]
}

fn plain_words(lm: &LanguageModel, rng: &mut Rng) -> Vec<String> {
    lm.standard_sentence(rng).trim_end_matches(['.', '?', '!']).split(' ').map(String::from).collect()
}

/// Two-class task (`neg`/`pos`) where the label is decided by which of two
/// disjoint keyword sets the sentence draws a keyword from.
pub fn separable_task(lm: &LanguageModel, n: usize, seed: u64) -> Vec<TaskExample> {
    let mut rng = rng::seeded(seed);
    let keys = keyword_sets(lm);
    (0..n)
        .map(|i| {
            let class = i % 2;
            let mut words = plain_words(lm, &mut rng);
            let pos = rng.gen_range(0..=words.len());
            words.insert(pos, keys[class].choose(&mut rng).unwrap().clone());
            TaskExample::text(words.join(" "), ["neg", "pos"][class])
        })
        .collect()
}

/// Token task: keywords from the two sets are tagged `A` and `B`, every
/// other word `O`.
pub fn tagging_task(lm: &LanguageModel, n: usize, seed: u64) -> Vec<TaskExample> {
    let mut rng = rng::seeded(seed);
    let keys = keyword_sets(lm);
    (0..n)
        .map(|_| {
            let mut words = plain_words(lm, &mut rng);
            let mut labels: Vec<String> = words.iter().map(|_| String::from("O")).collect();
            for _ in 0..rng.gen_range(1..=2) {
                let class = rng.gen_range(0..2);
                let pos = rng.gen_range(0..=words.len());
                words.insert(pos, keys[class].choose(&mut rng).unwrap().clone());
                labels.insert(pos, String::from(["A", "B"][class]));
            }
            TaskExample::tokens(words, labels)
        })
        .collect()
}

/// Pair task: the label is `same` when both sentences carry a keyword from
/// the same set, `different` otherwise.
pub fn pair_task(lm: &LanguageModel, n: usize, seed: u64) -> Vec<TaskExample> {
    let mut rng = rng::seeded(seed);
    let keys = keyword_sets(lm);
    (0..n)
        .map(|i| {
            let a = rng.gen_range(0..2);
            let b = if i % 2 == 0 { a } else { 1 - a };
            let mut sides = [a, b].map(|class| {
                let mut words = plain_words(lm, &mut rng);
                let pos = rng.gen_range(0..=words.len());
                words.insert(pos, keys[class].choose(&mut rng).unwrap().clone());
                words.join(" ")
            });
            let [x, y] = core::mem::take(&mut sides);
            TaskExample::pair(x, y, if a == b { "same" } else { "different" })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::corpus_word_doc_counts;

    #[test]
    fn rewrite_changes_every_word() {
        let lm = LanguageModel::new(&SynthConfig::default(), 1);
        assert!(lm.lexicon().iter().all(|w| rewrite_word(w) != *w));
        assert_eq!(rewrite_word("etxea"), "etxeie");
        assert_eq!(rewrite_word("zakur"), "xakhure");
        assert_eq!(rewrite_sentence("Kaixo zer moduz."), "Khaixu xere moduxe.");
    }

    #[test]
    fn generation_is_deterministic() {
        let a = LanguageModel::new(&SynthConfig::default(), 3);
        let b = LanguageModel::new(&SynthConfig::default(), 3);
        assert_eq!(a.lexicon(), b.lexicon());
        let spec = SourceSpec::new("src", 4, 5, 0.5);
        assert_eq!(a.source(&spec, Regime::Diverse, 9).unwrap().corpus, b.source(&spec, Regime::Diverse, 9).unwrap().corpus);
    }

    #[test]
    fn injected_proportion_is_exact() {
        let lm = LanguageModel::new(&SynthConfig::default(), 3);
        let src = lm.source(&SourceSpec::new("ekc", 50, 40, 0.733), Regime::Diverse, 1).unwrap();
        assert!((src.true_mean_diversity() - 0.733).abs() < 1e-12);
    }

    #[test]
    fn word_budget_is_exact() {
        let lm = LanguageModel::new(&SynthConfig::default(), 3);
        let c = lm.documents_with_word_budget("booktegi", 7, 1003, 1).unwrap();
        assert_eq!(corpus_word_doc_counts(&c), (7, 1003));
    }
}
