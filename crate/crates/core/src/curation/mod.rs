//! Corpus curation: normalization, a minimal length filter and two-stage
//! (exact, then MinHash near-duplicate) deduplication.

mod minhash;
mod normalize;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use minhash::{estimate_similarity, shingles, MinHasher};
pub use normalize::{normalize_document, normalize_text};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::rng::fnv1a;

pub const DEFAULT_NEAR_THRESHOLD: f64 = 0.8;
pub const DEFAULT_MIN_WORDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupReport {
    pub input_docs: usize,
    pub exact_removed: usize,
    pub near_removed: usize,
    pub surviving_docs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DedupConfig {
    pub near_threshold: f64,
    pub num_perm: usize,
    pub shingle_words: usize,
    pub seed: u64,
}

impl Default for DedupConfig {
    fn default() -> Self {
        Self { near_threshold: DEFAULT_NEAR_THRESHOLD, num_perm: 128, shingle_words: 5, seed: 0x5eed_d0c5 }
    }
}

/// Normalizes every document and drops the ones left with fewer than
/// `min_words` words.
pub fn normalize_and_filter(corpus: &Corpus, min_words: usize) -> Corpus {
    let documents = corpus
        .documents
        .iter()
        .map(normalize_document)
        .filter(|d| d.word_count() >= min_words)
        .collect();
    Corpus { name: corpus.name.clone(), regime: corpus.regime, documents }
}

pub fn deduplicate(corpus: &Corpus, near_threshold: f64) -> Result<(Corpus, DedupReport)> {
    deduplicate_with(corpus, &DedupConfig { near_threshold, ..DedupConfig::default() })
}

/// Removes exact duplicates, then near duplicates, always keeping the first
/// occurrence and preserving the order of survivors.
pub fn deduplicate_with(corpus: &Corpus, config: &DedupConfig) -> Result<(Corpus, DedupReport)> {
    let t = config.near_threshold;
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Argument(format!("near-duplicate threshold must lie in (0, 1], got {t}")));
    }
    if config.num_perm == 0 {
        return Err(Error::Argument(alloc::string::String::from("MinHash needs at least one permutation")));
    }

    // Exact stage: hash buckets, confirmed by full text comparison.
    let mut by_hash: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    let mut exact_kept = Vec::with_capacity(corpus.len());
    for (i, doc) in corpus.documents.iter().enumerate() {
        let bucket = by_hash.entry(fnv1a(doc.text.as_bytes())).or_default();
        if bucket.iter().any(|&j| corpus.documents[j].text == doc.text) {
            continue;
        }
        bucket.push(i);
        exact_kept.push(i);
    }
    let exact_removed = corpus.len() - exact_kept.len();

    // Near stage: LSH banding proposes kept candidates, the full signature
    // decides.
    let hasher = MinHasher::new(config.num_perm, config.seed);
    let rows = band_rows(t, config.num_perm);
    let mut buckets: BTreeMap<(usize, u64), Vec<usize>> = BTreeMap::new();
    let mut signatures: Vec<Vec<u64>> = Vec::new();
    let mut survivors = Vec::with_capacity(exact_kept.len());
    for &i in &exact_kept {
        let sig = hasher.signature(&shingles(&corpus.documents[i].text, config.shingle_words));
        let keys: Vec<(usize, u64)> = sig
            .chunks(rows)
            .enumerate()
            .map(|(b, band)| (b, band.iter().fold(0u64, |h, &x| crate::rng::splitmix64(h ^ x))))
            .collect();
        let mut candidates: Vec<usize> = keys.iter().filter_map(|k| buckets.get(k)).flatten().copied().collect();
        candidates.sort_unstable();
        candidates.dedup();
        let duplicate = candidates.iter().any(|&k| estimate_similarity(&signatures[k], &sig) >= t);
        if duplicate {
            continue;
        }
        let kept_idx = signatures.len();
        signatures.push(sig);
        for k in keys {
            buckets.entry(k).or_default().push(kept_idx);
        }
        survivors.push(i);
    }
    let near_removed = exact_kept.len() - survivors.len();

    let documents: Vec<_> = survivors.iter().map(|&i| corpus.documents[i].clone()).collect();
    let report = DedupReport {
        input_docs: corpus.len(),
        exact_removed,
        near_removed,
        surviving_docs: documents.len(),
    };
    Ok((Corpus { name: corpus.name.clone(), regime: corpus.regime, documents }, report))
}

/// Largest band width whose candidate recall at similarity `t` is at least
/// 0.999 (1 row per band always qualifies for practical thresholds).
fn band_rows(t: f64, num_perm: usize) -> usize {
    let mut best = 1;
    for r in [2usize, 4, 8, 16] {
        if r > num_perm {
            break;
        }
        let bands = (num_perm / r) as f64;
        let recall = 1.0 - libm::pow(1.0 - libm::pow(t, r as f64), bands);
        if recall >= 0.999 {
            best = r;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, Regime};
    use crate::rng;
    use alloc::collections::BTreeSet;
    use alloc::string::String;
    use alloc::vec;
    use proptest::prelude::*;
    use rand::Rng;

    fn corpus(texts: &[String]) -> Corpus {
        let docs = texts.iter().enumerate().map(|(i, t)| Document::new(format!("d{i}"), "s", t.clone())).collect();
        Corpus::new("c", Regime::Standard, docs).unwrap()
    }

    fn random_text(rng: &mut rng::Rng, words: usize, vocab: usize) -> String {
        (0..words).map(|_| format!("w{}", rng.gen_range(0..vocab))).collect::<Vec<_>>().join(" ")
    }

    /// Brute-force Jaccard over literal shingle strings.
    fn jaccard(a: &str, b: &str, k: usize) -> f64 {
        let sh = |t: &str| -> BTreeSet<String> {
            let ws: Vec<&str> = t.split_whitespace().collect();
            if ws.len() < k {
                return [ws.join(" ")].into_iter().collect();
            }
            ws.windows(k).map(|w| w.join(" ")).collect()
        };
        let (x, y) = (sh(a), sh(b));
        x.intersection(&y).count() as f64 / x.union(&y).count() as f64
    }

    #[test]
    fn identical_docs_leave_one() {
        let t = String::from("bat bi hiru lau bost sei");
        let (out, rep) = deduplicate(&corpus(&[t.clone(), t]), 0.8).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(rep, DedupReport { input_docs: 2, exact_removed: 1, near_removed: 0, surviving_docs: 1 });
        assert_eq!(out.documents[0].id, "d0");
    }

    #[test]
    fn one_word_change_in_200_is_near_duplicate() {
        let mut rng = rng::seeded(4);
        let a = random_text(&mut rng, 200, 100_000);
        let mut ws: Vec<&str> = a.split(' ').collect();
        ws[100] = "aldatua";
        let b = ws.join(" ");
        let j = jaccard(&a, &b, 5);
        assert!((j - 0.951).abs() < 0.01, "jaccard {j}");
        let (out, rep) = deduplicate(&corpus(&[a, b]), 0.8).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!((rep.exact_removed, rep.near_removed), (0, 1));
    }

    #[test]
    fn distinct_docs_survive() {
        let mut rng = rng::seeded(5);
        let texts: Vec<String> = (0..50).map(|_| random_text(&mut rng, 30, 5000)).collect();
        let (out, rep) = deduplicate(&corpus(&texts), 0.99).unwrap();
        assert_eq!(out.len(), 50);
        assert_eq!(rep.exact_removed + rep.near_removed, 0);
    }

    #[test]
    fn threshold_out_of_range() {
        let c = corpus(&[String::from("a")]);
        assert!(matches!(deduplicate(&c, 0.0), Err(Error::Argument(_))));
        assert!(matches!(deduplicate(&c, 1.01), Err(Error::Argument(_))));
        assert!(deduplicate(&c, 1.0).is_ok());
    }

    #[test]
    fn minhash_tracks_brute_force_jaccard() {
        let mut rng = rng::seeded(11);
        let hasher = MinHasher::new(128, 3);
        let mut total_err = 0.0;
        for _ in 0..1000 {
            let base: Vec<String> = (0..40).map(|_| format!("w{}", rng.gen_range(0..400))).collect();
            let keep = rng.gen_range(0..=40);
            let mut other = base.clone();
            for w in other.iter_mut().skip(keep) {
                *w = format!("v{}", rng.gen_range(0..400));
            }
            let (a, b) = (base.join(" "), other.join(" "));
            let est = estimate_similarity(&hasher.signature(&shingles(&a, 5)), &hasher.signature(&shingles(&b, 5)));
            total_err += (est - jaccard(&a, &b, 5)).abs();
        }
        let mae = total_err / 1000.0;
        assert!(mae <= 0.06, "mean absolute error {mae}");
    }

    #[test]
    fn short_documents_filtered() {
        let c = corpus(&[String::from("bat bi hiru"), String::from("  bat   bi hiru lau bost  ")]);
        let out = normalize_and_filter(&c, DEFAULT_MIN_WORDS);
        assert_eq!(out.len(), 1);
        assert_eq!(out.documents[0].text, "bat bi hiru lau bost");
    }

    #[test]
    fn band_rows_keep_recall() {
        assert_eq!(band_rows(0.8, 128), 4);
        assert_eq!(band_rows(0.2, 128), 1);
        assert_eq!(band_rows(1.0, 128), 16);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn second_pass_removes_nothing_and_order_is_kept(
            picks in proptest::collection::vec((0usize..8, 0usize..3), 1..30),
            t in 0.3f64..=1.0,
        ) {
            let mut rng = rng::seeded(1);
            let bases: Vec<String> = (0..8).map(|_| random_text(&mut rng, 20, 50)).collect();
            let texts: Vec<String> = picks.iter().map(|&(b, edit)| {
                let mut ws: Vec<String> = bases[b].split(' ').map(String::from).collect();
                for k in 0..edit { ws[k * 7] = format!("x{k}"); }
                ws.join(" ")
            }).collect();
            let (once, _) = deduplicate(&corpus(&texts), t).unwrap();
            let (twice, rep) = deduplicate(&once, t).unwrap();
            prop_assert_eq!(rep.exact_removed + rep.near_removed, 0);
            prop_assert_eq!(&twice, &once);
            let idx: Vec<usize> = once.documents.iter().map(|d| d.id[1..].parse().unwrap()).collect();
            prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(idx[0], 0);
        }
    }

    #[test]
    fn report_identity() {
        let t = |s: &str| String::from(s);
        let texts = vec![t("a b c d e f"), t("a b c d e f"), t("g h i j k l"), t("a b c d e g")];
        let (_, r) = deduplicate(&corpus(&texts), 0.3).unwrap();
        assert_eq!(r.surviving_docs, r.input_docs - r.exact_removed - r.near_removed);
    }
}
