//! MinHash signatures over word shingles.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::rng::{fnv1a, splitmix64};
use crate::text::words;

/// Hashes of the overlapping `k`-word windows of `text`. Texts shorter than
/// `k` words form a single shingle.
pub fn shingles(text: &str, k: usize) -> BTreeSet<u64> {
    let ws: Vec<&str> = words(text).collect();
    let mut out = BTreeSet::new();
    if ws.is_empty() {
        return out;
    }
    let k = k.max(1);
    if ws.len() < k {
        out.insert(hash_window(&ws));
        return out;
    }
    for window in ws.windows(k) {
        out.insert(hash_window(window));
    }
    out
}

fn hash_window(ws: &[&str]) -> u64 {
    let mut h = 0u64;
    for w in ws {
        h = splitmix64(h ^ fnv1a(w.as_bytes()));
    }
    h
}

#[derive(Debug, Clone)]
pub struct MinHasher {
    seeds: Vec<u64>,
}

impl MinHasher {
    pub fn new(num_perm: usize, seed: u64) -> Self {
        let mut s = seed;
        let seeds = (0..num_perm)
            .map(|_| {
                s = splitmix64(s);
                s
            })
            .collect();
        Self { seeds }
    }

    pub fn num_perm(&self) -> usize {
        self.seeds.len()
    }

    pub fn signature(&self, shingles: &BTreeSet<u64>) -> Vec<u64> {
        self.seeds
            .iter()
            .map(|&s| shingles.iter().map(|&h| splitmix64(h ^ s)).min().unwrap_or(u64::MAX))
            .collect()
    }
}

/// Fraction of agreeing signature slots, an estimate of Jaccard similarity.
pub fn estimate_similarity(a: &[u64], b: &[u64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 0.0;
    }
    a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / a.len() as f64
}
