//! Document- and source-level linguistic diversity.
//!
//! A document's diversity is the fraction of its sentences classified as
//! non-standard; a source's diversity is the unweighted mean of its
//! documents' scores, reported together with the population standard
//! deviation.

mod classifier;
mod segment;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use classifier::{
    ngram_features, train_variety_classifier, train_variety_classifier_with, ClassifierKind, ClassifierModel,
    ClassifierTrainConfig, SentenceClassifier, VarietyClassifier, VarietyLabel, CLASSIFIER_FORMAT_VERSION,
    MIN_TRAINING_SENTENCES,
};
pub use segment::segment_sentences;

use crate::corpus::{source_counts, Corpus, Document, SourceStats};
use crate::error::{Error, Result};
use crate::stats::mean_std;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityScore {
    pub document_id: String,
    pub nonstandard_count: usize,
    pub sentence_count: usize,
    pub score: f64,
    /// Set when the document has no sentences; the score is then 0.
    pub degenerate: bool,
}

pub fn document_diversity<C: SentenceClassifier + ?Sized>(classifier: &C, doc: &Document) -> DiversityScore {
    let sentences = segment_sentences(&doc.text);
    let nonstandard = sentences
        .iter()
        .filter(|s| classifier.classify(s) == VarietyLabel::Nonstandard)
        .count();
    let n = sentences.len();
    DiversityScore {
        document_id: doc.id.clone(),
        nonstandard_count: nonstandard,
        sentence_count: n,
        score: if n == 0 { 0.0 } else { nonstandard as f64 / n as f64 },
        degenerate: n == 0,
    }
}

/// Scores every document and reduces to one row per source, sorted by
/// ascending mean diversity.
pub fn source_diversity_report<C: SentenceClassifier + ?Sized>(
    classifier: &C,
    corpora: &[Corpus],
) -> Result<Vec<SourceStats>> {
    check_non_empty(corpora)?;
    let scores: Vec<Vec<DiversityScore>> = corpora
        .iter()
        .map(|c| c.documents.iter().map(|d| document_diversity(classifier, d)).collect())
        .collect();
    aggregate_source_stats(corpora, &scores)
}

/// Reduces precomputed per-document scores (`scores[i][j]` belongs to
/// `corpora[i].documents[j]`) into the per-source report.
pub fn aggregate_source_stats(corpora: &[Corpus], scores: &[Vec<DiversityScore>]) -> Result<Vec<SourceStats>> {
    check_non_empty(corpora)?;
    if scores.len() != corpora.len() || corpora.iter().zip(scores).any(|(c, s)| c.len() != s.len()) {
        return Err(Error::Argument(String::from("score table does not match the corpora")));
    }
    let mut per_source: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (corpus, doc_scores) in corpora.iter().zip(scores) {
        for (doc, s) in corpus.documents.iter().zip(doc_scores) {
            per_source.entry(doc.source.as_str()).or_default().push(s.score);
        }
    }
    let mut rows: Vec<SourceStats> = source_counts(corpora)
        .into_iter()
        .map(|(source, doc_count, word_count)| {
            // Sorted so the floating-point reduction ignores document order.
            let mut values = per_source[source.as_str()].clone();
            values.sort_by(f64::total_cmp);
            let (mean, std) = mean_std(&values);
            SourceStats { source, doc_count, word_count, diversity_mean: mean, diversity_std: std }
        })
        .collect();
    rows.sort_by(|a, b| a.diversity_mean.total_cmp(&b.diversity_mean).then_with(|| a.source.cmp(&b.source)));
    Ok(rows)
}

fn check_non_empty(corpora: &[Corpus]) -> Result<()> {
    match corpora.iter().find(|c| c.is_empty()) {
        Some(c) => Err(Error::Empty(format!("corpus `{}` has no documents", c.name))),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Regime;
    use alloc::vec;
    use proptest::prelude::*;

    /// Marks any sentence containing "X" as non-standard.
    struct MarkerClassifier;

    impl SentenceClassifier for MarkerClassifier {
        fn score(&self, sentence: &str) -> f64 {
            if sentence.contains('X') {
                1.0
            } else {
                0.0
            }
        }
        fn threshold(&self) -> f64 {
            0.5
        }
    }

    fn doc(id: &str, source: &str, text: &str) -> Document {
        Document::new(id, source, text)
    }

    #[test]
    fn all_standard_scores_zero() {
        let d = doc("d", "s", "Bat. Bi. Hiru. Lau. Bost.");
        let s = document_diversity(&MarkerClassifier, &d);
        assert_eq!((s.sentence_count, s.nonstandard_count, s.score), (5, 0, 0.0));
        assert!(!s.degenerate);
    }

    #[test]
    fn three_of_four() {
        let d = doc("d", "s", "X bat. X bi. Hiru. X lau.");
        assert_eq!(document_diversity(&MarkerClassifier, &d).score, 0.75);
    }

    #[test]
    fn empty_text_is_degenerate() {
        let s = document_diversity(&MarkerClassifier, &doc("d", "s", "   "));
        assert_eq!(s.score, 0.0);
        assert!(s.degenerate);
    }

    #[test]
    fn report_mean_and_population_std() {
        let c = Corpus::new("c", Regime::Standard, vec![doc("a", "s", "Ondo."), doc("b", "s", "X.")]).unwrap();
        let r = source_diversity_report(&MarkerClassifier, &[c]).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!((r[0].diversity_mean, r[0].diversity_std), (0.5, 0.5));
        assert_eq!((r[0].doc_count, r[0].word_count), (2, 2));
    }

    #[test]
    fn single_doc_report() {
        let c = Corpus::new("c", Regime::Standard, vec![doc("a", "s", "X. B. C. D. E.")]).unwrap();
        let r = source_diversity_report(&MarkerClassifier, &[c]).unwrap();
        assert!((r[0].diversity_mean - 0.2).abs() < 1e-15);
        assert_eq!(r[0].diversity_std, 0.0);
    }

    #[test]
    fn empty_corpus_named_in_error() {
        let e = source_diversity_report(&MarkerClassifier, &[Corpus::empty("ekc", Regime::Diverse)]).unwrap_err();
        assert!(matches!(&e, Error::Empty(m) if m.contains("ekc")));
    }

    #[test]
    fn rows_sorted_by_mean() {
        let c = Corpus::new(
            "c",
            Regime::Both,
            vec![doc("1", "high", "X. X."), doc("2", "low", "A. B."), doc("3", "mid", "X. B.")],
        )
        .unwrap();
        let r = source_diversity_report(&MarkerClassifier, &[c]).unwrap();
        let names: Vec<_> = r.iter().map(|s| s.source.as_str()).collect();
        assert_eq!(names, vec!["low", "mid", "high"]);
    }

    fn text_from(flags: &[bool]) -> String {
        flags.iter().map(|&x| if x { "X ez." } else { "Bai." }).collect::<Vec<_>>().join(" ")
    }

    proptest! {
        #[test]
        fn score_bounds_and_exact_ratio(flags in proptest::collection::vec(any::<bool>(), 0..40)) {
            let s = document_diversity(&MarkerClassifier, &doc("d", "s", &text_from(&flags)));
            prop_assert!((0.0..=1.0).contains(&s.score));
            prop_assert_eq!(s.nonstandard_count, flags.iter().filter(|&&x| x).count());
            prop_assert_eq!((s.score * s.sentence_count as f64).round() as usize, s.nonstandard_count);
        }

        #[test]
        fn flipping_a_sentence_never_lowers_score(flags in proptest::collection::vec(any::<bool>(), 1..40), pick in any::<usize>()) {
            let mut flipped = flags.clone();
            if let Some(i) = (0..flags.len()).map(|k| (pick + k) % flags.len()).find(|&i| !flags[i]) {
                flipped[i] = true;
            }
            let before = document_diversity(&MarkerClassifier, &doc("d", "s", &text_from(&flags))).score;
            let after = document_diversity(&MarkerClassifier, &doc("d", "s", &text_from(&flipped))).score;
            prop_assert!(after >= before);
        }

        #[test]
        fn report_matches_brute_force_and_ignores_order(
            docs in proptest::collection::vec((0usize..3, proptest::collection::vec(any::<bool>(), 1..10)), 3..30),
            rot in 0usize..30,
        ) {
            let documents: Vec<Document> = docs
                .iter()
                .enumerate()
                .map(|(i, (src, flags))| doc(&format!("d{i}"), ["a", "b", "c"][*src], &text_from(flags)))
                .collect();
            let corpus = Corpus::new("c", Regime::Both, documents.clone()).unwrap();
            let report = source_diversity_report(&MarkerClassifier, &[corpus]).unwrap();
            for row in &report {
                let vals: Vec<f64> = docs.iter().filter(|(s, _)| ["a", "b", "c"][*s] == row.source)
                    .map(|(_, f)| f.iter().filter(|&&x| x).count() as f64 / f.len() as f64).collect();
                let n = vals.len() as f64;
                let mean = vals.iter().sum::<f64>() / n;
                let std = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
                prop_assert!((row.diversity_mean - mean).abs() <= 1e-12);
                prop_assert!((row.diversity_std - std).abs() <= 1e-12);
            }
            let mut shuffled = documents;
            let k = rot % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            let again = source_diversity_report(&MarkerClassifier, &[Corpus::new("c", Regime::Both, shuffled).unwrap()]).unwrap();
            prop_assert_eq!(report.len(), again.len());
            for (a, b) in report.iter().zip(&again) {
                prop_assert_eq!(&a.source, &b.source);
                prop_assert_eq!((a.doc_count, a.word_count), (b.doc_count, b.word_count));
                prop_assert_eq!(a.diversity_mean.to_bits(), b.diversity_mean.to_bits());
                prop_assert_eq!(a.diversity_std.to_bits(), b.diversity_std.to_bits());
            }
        }
    }
}
