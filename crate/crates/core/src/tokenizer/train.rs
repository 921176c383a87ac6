use alloc::collections::{BTreeMap, BTreeSet, BinaryHeap};
use alloc::format;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::{chunks, specials, SubwordTokenizer, TokenId};
use crate::corpus::Corpus;
use crate::error::{Error, Result};

type Pair = (TokenId, TokenId);

/// Heap entry: highest count first, then the byte-wise smaller pair.
#[derive(PartialEq, Eq)]
struct Candidate {
    count: u64,
    bytes: (Vec<u8>, Vec<u8>),
    pair: Pair,
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count.cmp(&other.count).then_with(|| other.bytes.cmp(&self.bytes))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Word {
    symbols: Vec<TokenId>,
    freq: u64,
}

/// Trains a byte-level BPE tokenizer.
///
/// Starts from the bytes seen in `corpus` and repeatedly merges the most
/// frequent adjacent pair (ties: byte-wise smaller pair) until the vocabulary
/// holds `vocab_size` entries or no pair occurs at least twice.
pub fn train_bpe(corpus: &Corpus, vocab_size: usize) -> Result<SubwordTokenizer> {
    if corpus.is_empty() {
        return Err(Error::Empty(format!("cannot train a tokenizer on empty corpus `{}`", corpus.name)));
    }
    let mut chunk_freq: BTreeMap<&[u8], u64> = BTreeMap::new();
    for doc in &corpus.documents {
        for c in chunks(&doc.text) {
            *chunk_freq.entry(c.as_bytes()).or_insert(0) += 1;
        }
    }
    let alphabet: Vec<u8> = chunk_freq.keys().flat_map(|c| c.iter().copied()).collect::<BTreeSet<u8>>().into_iter().collect();
    let base = alphabet.len() + specials::COUNT;
    if vocab_size <= base {
        return Err(Error::Argument(format!(
            "vocab size {vocab_size} must exceed the {} byte symbols plus {} specials",
            alphabet.len(),
            specials::COUNT
        )));
    }

    let mut tok = SubwordTokenizer::from_parts(&alphabet, &[]);
    let mut words: Vec<Word> = chunk_freq
        .iter()
        .map(|(c, &freq)| Word { symbols: c.iter().map(|b| tok.lookup[core::slice::from_ref(b)]).collect(), freq })
        .collect();

    let mut counts: BTreeMap<Pair, u64> = BTreeMap::new();
    let mut occurs: BTreeMap<Pair, BTreeSet<usize>> = BTreeMap::new();
    for (wi, w) in words.iter().enumerate() {
        for p in w.symbols.windows(2) {
            let pair = (p[0], p[1]);
            *counts.entry(pair).or_insert(0) += w.freq;
            occurs.entry(pair).or_default().insert(wi);
        }
    }
    let candidate = |tok: &SubwordTokenizer, pair: Pair, count: u64| Candidate {
        count,
        bytes: (tok.tokens[pair.0 as usize].clone(), tok.tokens[pair.1 as usize].clone()),
        pair,
    };
    let mut heap: BinaryHeap<Candidate> = counts.iter().map(|(&p, &c)| candidate(&tok, p, c)).collect();

    while tok.vocab_size() < vocab_size {
        let Some(top) = heap.pop() else { break };
        let current = counts.get(&top.pair).copied().unwrap_or(0);
        if current != top.count {
            continue; // stale
        }
        if current < 2 {
            break;
        }
        let (left, right) = top.pair;
        let new_id = tok.push_merge(left, right);

        let affected: Vec<usize> = occurs.remove(&top.pair).map(|s| s.into_iter().collect()).unwrap_or_default();
        let mut touched: BTreeSet<Pair> = BTreeSet::new();
        for wi in affected {
            let word = &mut words[wi];
            let before = word.symbols.clone();
            let mut merged = Vec::with_capacity(before.len());
            let mut i = 0;
            while i < before.len() {
                if i + 1 < before.len() && before[i] == left && before[i + 1] == right {
                    merged.push(new_id);
                    i += 2;
                } else {
                    merged.push(before[i]);
                    i += 1;
                }
            }
            if merged.len() == before.len() {
                continue;
            }
            for p in before.windows(2) {
                let pair = (p[0], p[1]);
                if let Some(c) = counts.get_mut(&pair) {
                    *c -= word.freq;
                }
                touched.insert(pair);
            }
            for p in merged.windows(2) {
                let pair = (p[0], p[1]);
                *counts.entry(pair).or_insert(0) += word.freq;
                occurs.entry(pair).or_default().insert(wi);
                touched.insert(pair);
            }
            word.symbols = merged;
        }
        counts.remove(&top.pair);
        for pair in touched {
            match counts.get(&pair) {
                Some(&0) => {
                    counts.remove(&pair);
                }
                Some(&c) if pair != top.pair => heap.push(candidate(&tok, pair, c)),
                _ => {}
            }
        }
    }
    Ok(tok)
}
