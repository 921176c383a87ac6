//! Document and corpus data model, plus the two social-media reorderings
//! (chronological and per-author) used to double a corpus.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::word_count;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarietyHint {
    Standard,
    Diverse,
    #[default]
    Unknown,
}

/// Which mix of sources a corpus represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Standard,
    Diverse,
    Both,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::Standard, Regime::Diverse, Regime::Both];

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Standard => "standard",
            Regime::Diverse => "diverse",
            Regime::Both => "both",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Regime::Standard),
            "diverse" => Ok(Regime::Diverse),
            "both" => Ok(Regime::Both),
            other => Err(Error::Argument(format!("unknown regime `{other}`"))),
        }
    }
}

impl core::fmt::Display for Regime {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub source: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<i64>,
    #[serde(default)]
    pub variety_hint: VarietyHint,
}

impl Document {
    pub fn new(id: impl Into<String>, source: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            source: source.into(),
            text: text.into(),
            author: None,
            timestamp: None,
            variety_hint: VarietyHint::Unknown,
        }
    }

    pub fn with_author(mut self, author: impl Into<String>) -> Self {
        self.author = Some(author.into());
        self
    }

    pub fn with_timestamp(mut self, ts: i64) -> Self {
        self.timestamp = Some(ts);
        self
    }

    pub fn with_hint(mut self, hint: VarietyHint) -> Self {
        self.variety_hint = hint;
        self
    }

    pub fn word_count(&self) -> usize {
        word_count(&self.text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub name: String,
    pub regime: Regime,
    pub documents: Vec<Document>,
}

impl Corpus {
    /// Builds a corpus, rejecting duplicate document ids.
    pub fn new(name: impl Into<String>, regime: Regime, documents: Vec<Document>) -> Result<Self> {
        let corpus = Self { name: name.into(), regime, documents };
        corpus.check_unique_ids()?;
        Ok(corpus)
    }

    pub fn empty(name: impl Into<String>, regime: Regime) -> Self {
        Self { name: name.into(), regime, documents: Vec::new() }
    }

    /// Concatenates a standard-regime and a diverse-regime corpus into a
    /// `both` corpus.
    pub fn both(name: impl Into<String>, standard: &Corpus, diverse: &Corpus) -> Result<Self> {
        if standard.regime != Regime::Standard || diverse.regime != Regime::Diverse {
            return Err(Error::Argument(format!(
                "`both` needs a standard and a diverse corpus, got {} and {}",
                standard.regime, diverse.regime
            )));
        }
        let documents = standard.documents.iter().chain(&diverse.documents).cloned().collect();
        Self::new(name, Regime::Both, documents)
    }

    /// Concatenates corpora of the same regime.
    pub fn concat(name: impl Into<String>, regime: Regime, parts: &[Corpus]) -> Result<Self> {
        let documents = parts.iter().flat_map(|c| c.documents.iter().cloned()).collect();
        Self::new(name, regime, documents)
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    fn check_unique_ids(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for doc in &self.documents {
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::Precondition(format!(
                    "duplicate document id `{}` in corpus `{}`",
                    doc.id, self.name
                )));
            }
        }
        Ok(())
    }

    fn with_documents(&self, documents: Vec<Document>) -> Self {
        Self { name: self.name.clone(), regime: self.regime, documents }
    }
}

/// Size and diversity summary of one source, one row of the diversity report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceStats {
    pub source: String,
    pub doc_count: usize,
    pub word_count: usize,
    pub diversity_mean: f64,
    pub diversity_std: f64,
}

pub fn corpus_word_doc_counts(corpus: &Corpus) -> (usize, usize) {
    let words = corpus.documents.iter().map(Document::word_count).sum();
    (corpus.documents.len(), words)
}

/// Per-source `(doc_count, word_count)` in order of first appearance.
pub fn source_counts(corpora: &[Corpus]) -> Vec<(String, usize, usize)> {
    let mut order: Vec<String> = Vec::new();
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for doc in corpora.iter().flat_map(|c| &c.documents) {
        let entry = counts.entry(doc.source.as_str()).or_insert_with(|| {
            order.push(doc.source.clone());
            (0, 0)
        });
        entry.0 += 1;
        entry.1 += doc.word_count();
    }
    order
        .into_iter()
        .map(|s| {
            let (d, w) = counts[s.as_str()];
            (s, d, w)
        })
        .collect()
}

/// Sorts documents by timestamp, breaking ties by id.
pub fn reorder_by_time(corpus: &Corpus) -> Result<Corpus> {
    let mut keyed = Vec::with_capacity(corpus.len());
    for doc in &corpus.documents {
        let ts = doc.timestamp.ok_or_else(|| {
            Error::Precondition(format!("document `{}` has no timestamp", doc.id))
        })?;
        keyed.push((ts, doc));
    }
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.id.cmp(&b.1.id)));
    Ok(corpus.with_documents(keyed.into_iter().map(|(_, d)| d.clone()).collect()))
}

/// Merges all posts of each author into one document.
///
/// Authors keep their order of first appearance; posts inside an author are
/// joined with `\n` in ascending timestamp order (stable for equal or
/// missing timestamps). The merged id is `author:<name>`, so grouping an
/// already grouped corpus is a no-op.
pub fn group_by_author(corpus: &Corpus) -> Result<Corpus> {
    let mut order: Vec<&str> = Vec::new();
    let mut posts: BTreeMap<&str, Vec<&Document>> = BTreeMap::new();
    for doc in &corpus.documents {
        let author = doc
            .author
            .as_deref()
            .ok_or_else(|| Error::Precondition(format!("document `{}` has no author", doc.id)))?;
        posts
            .entry(author)
            .or_insert_with(|| {
                order.push(author);
                Vec::new()
            })
            .push(doc);
    }

    let mut merged = Vec::with_capacity(order.len());
    for author in order {
        let mut list = posts.remove(author).unwrap_or_default();
        list.sort_by_key(|d| d.timestamp);
        let first = list[0];
        let text = list.iter().map(|d| d.text.as_str()).collect::<Vec<_>>().join("\n");
        let hint = if list.iter().all(|d| d.variety_hint == first.variety_hint) {
            first.variety_hint
        } else {
            VarietyHint::Unknown
        };
        merged.push(Document {
            id: format!("author:{author}"),
            source: first.source.clone(),
            text,
            author: Some(String::from(author)),
            timestamp: list.iter().filter_map(|d| d.timestamp).min(),
            variety_hint: hint,
        });
    }
    Ok(corpus.with_documents(merged))
}

/// Emits the chronological ordering followed by the per-author grouping,
/// doubling the corpus content.
pub fn augment_time_and_author(corpus: &Corpus) -> Result<Corpus> {
    let by_time = reorder_by_time(corpus)?;
    let by_author = group_by_author(corpus)?;
    let mut documents = by_time.documents;
    documents.extend(by_author.documents);
    Corpus::new(corpus.name.clone(), corpus.regime, documents)
}
