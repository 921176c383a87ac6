use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{chunks, is_word_chunk, SubwordTokenizer};
use crate::corpus::Corpus;
use crate::error::{Error, Result};

/// Subword tokens per whitespace word over the whole corpus.
///
/// Only chunks that carry a word are counted; pure whitespace chunks are
/// layout and never add to the numerator.
pub fn fertility(tokenizer: &SubwordTokenizer, corpus: &Corpus) -> Result<f64> {
    let mut cache: BTreeMap<&str, usize> = BTreeMap::new();
    let mut scratch = Vec::new();
    let mut tokens = 0usize;
    let mut words = 0usize;
    for doc in &corpus.documents {
        for chunk in chunks(&doc.text) {
            if !is_word_chunk(chunk) {
                continue;
            }
            words += 1;
            tokens += *cache.entry(chunk).or_insert_with(|| {
                scratch.clear();
                tokenizer.encode_chunk_into(chunk.as_bytes(), &mut scratch);
                scratch.len()
            });
        }
    }
    if words == 0 {
        return Err(Error::Empty(format!("corpus `{}` has no words", corpus.name)));
    }
    Ok(tokens as f64 / words as f64)
}

/// Tokenizers (rows) × evaluation corpora (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FertilityMatrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub cells: Vec<Vec<f64>>,
}

impl FertilityMatrix {
    pub fn get(&self, row: &str, col: &str) -> Option<f64> {
        let r = self.rows.iter().position(|x| x == row)?;
        let c = self.cols.iter().position(|x| x == col)?;
        Some(self.cells[r][c])
    }

    /// Row index holding the minimum of column `c`.
    pub fn column_argmin(&self, c: usize) -> usize {
        (0..self.rows.len()).min_by(|&a, &b| self.cells[a][c].total_cmp(&self.cells[b][c])).unwrap_or(0)
    }

    pub fn column_argmax(&self, c: usize) -> usize {
        (0..self.rows.len()).max_by(|&a, &b| self.cells[a][c].total_cmp(&self.cells[b][c])).unwrap_or(0)
    }

    /// Tab-separated table with a `tokenizer` header column, four decimals.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("tokenizer");
        for c in &self.cols {
            out.push('\t');
            out.push_str(c);
        }
        out.push('\n');
        for (name, row) in self.rows.iter().zip(&self.cells) {
            out.push_str(name);
            for v in row {
                let _ = write!(out, "\t{v:.4}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn fertility_matrix(
    tokenizers: &[(String, &SubwordTokenizer)],
    corpora: &[(String, &Corpus)],
) -> Result<FertilityMatrix> {
    distinct(tokenizers.iter().map(|t| t.0.as_str()), "tokenizer")?;
    distinct(corpora.iter().map(|c| c.0.as_str()), "corpus")?;
    let cells = tokenizers
        .iter()
        .map(|(_, tok)| corpora.iter().map(|(_, c)| fertility(tok, c)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(FertilityMatrix {
        rows: tokenizers.iter().map(|t| t.0.clone()).collect(),
        cols: corpora.iter().map(|c| c.0.clone()).collect(),
        cells,
    })
}

fn distinct<'a>(names: impl Iterator<Item = &'a str>, what: &str) -> Result<()> {
    let mut seen = BTreeSet::new();
    for n in names {
        if !seen.insert(n) {
            return Err(Error::Argument(format!("duplicate {what} name `{n}`")));
        }
    }
    Ok(())
}
