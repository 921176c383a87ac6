//! TOML configuration: the pipeline file, pretraining settings and task specs.

use std::path::{Path, PathBuf};

use lingdiv_core::curation::{DEFAULT_MIN_WORDS, DEFAULT_NEAR_THRESHOLD};
use lingdiv_core::encoder::{EncoderConfig, SizeClass};
use lingdiv_core::eval::{FinetuneConfig, TaskSpec};
use lingdiv_core::packing::{DEFAULT_SEQ_LEN, MIN_SEQ_LEN};
use lingdiv_core::tokenizer::DEFAULT_VOCAB_SIZE;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::read_string;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CorpusEntry {
    Path(PathBuf),
    Detailed {
        path: PathBuf,
        /// Emit the chronological and per-author orderings (doubles the corpus).
        #[serde(default)]
        augment: bool,
    },
}

impl CorpusEntry {
    pub fn path(&self) -> &Path {
        match self {
            Self::Path(p) | Self::Detailed { path: p, .. } => p,
        }
    }

    pub fn augment(&self) -> bool {
        matches!(self, Self::Detailed { augment: true, .. })
    }

    fn path_mut(&mut self) -> &mut PathBuf {
        match self {
            Self::Path(p) | Self::Detailed { path: p, .. } => p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorporaConfig {
    pub standard: Vec<CorpusEntry>,
    pub diverse: Vec<CorpusEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurationConfig {
    pub near_threshold: f64,
    pub min_words: usize,
}

impl Default for CurationConfig {
    fn default() -> Self {
        Self { near_threshold: DEFAULT_NEAR_THRESHOLD, min_words: DEFAULT_MIN_WORDS }
    }
}

/// Encoder shape and optimisation settings for pretraining. The shape comes
/// from `size_class`; the optional fields override single dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PretrainConfig {
    pub size_class: SizeClass,
    pub layers: Option<usize>,
    pub hidden_dim: Option<usize>,
    pub heads: Option<usize>,
    pub ffn_dim: Option<usize>,
    pub epochs: usize,
    /// Defaults to the size class's reference rate.
    pub lr: Option<f64>,
    pub batch_size: usize,
    pub seed: u64,
    /// Share of packed sequences held out for checkpoint selection.
    pub validation_fraction: f64,
    /// Cap on training sequences, taken from the front.
    pub max_sequences: Option<usize>,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            size_class: SizeClass::Toy,
            layers: None,
            hidden_dim: None,
            heads: None,
            ffn_dim: None,
            epochs: 5,
            lr: None,
            batch_size: 16,
            seed: 1,
            validation_fraction: 0.05,
            max_sequences: None,
        }
    }
}

impl PretrainConfig {
    pub fn encoder_config(&self, vocab_size: usize, max_positions: usize) -> Result<EncoderConfig> {
        let mut c = EncoderConfig::for_size(self.size_class, vocab_size, max_positions);
        c.layers = self.layers.unwrap_or(c.layers);
        c.hidden_dim = self.hidden_dim.unwrap_or(c.hidden_dim);
        c.heads = self.heads.unwrap_or(c.heads);
        c.ffn_dim = self.ffn_dim.unwrap_or(c.ffn_dim);
        c.validate()?;
        Ok(c)
    }

    pub fn peak_lr(&self) -> f64 {
        self.lr.unwrap_or_else(|| self.size_class.reference_lr())
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Config(String::from("pretrain batch_size must be positive and validation_fraction in [0, 1)")));
        }
        if self.lr.is_some_and(|lr| !(lr > 0.0)) {
            return Err(Error::Config(String::from("pretrain lr must be positive")));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let c: Self = parse_toml(path)?;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeSection {
    pub budget_steps: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for ProbeSection {
    fn default() -> Self {
        Self { budget_steps: 40, batch_size: 8, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FinetuneSection {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub max_len: Option<usize>,
}

impl Default for FinetuneSection {
    fn default() -> Self {
        let d = FinetuneConfig::default();
        Self { lr: d.lr, epochs: d.epochs, batch_size: d.batch_size, max_len: d.max_len }
    }
}

impl FinetuneSection {
    pub fn config(&self, seed: u64) -> FinetuneConfig {
        FinetuneConfig {
            lr: self.lr,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed,
            max_len: self.max_len,
            ..FinetuneConfig::default()
        }
    }
}

fn default_seq_len() -> usize {
    DEFAULT_SEQ_LEN
}

fn default_vocab_size() -> usize {
    DEFAULT_VOCAB_SIZE
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3]
}

fn default_lr_grid() -> Vec<f64> {
    vec![1e-2, 1e-3, 1e-4]
}

/// The single configuration file of `lingdiv pipeline`. Relative paths are
/// resolved against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub output_dir: PathBuf,
    pub classifier: PathBuf,
    pub corpora: CorporaConfig,
    #[serde(default = "default_vocab_size")]
    pub vocab_size: usize,
    #[serde(default = "default_seq_len")]
    pub seq_len: usize,
    #[serde(default = "default_lr_grid")]
    pub lr_grid: Vec<f64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub tasks: Vec<PathBuf>,
    #[serde(default)]
    pub curation: CurationConfig,
    #[serde(default)]
    pub pretrain: PretrainConfig,
    #[serde(default)]
    pub probe: ProbeSection,
    #[serde(default)]
    pub finetune: FinetuneSection,
}

fn parse_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    toml::from_str(&read_string(path)?).map_err(|e| Error::format(path, e.to_string()))
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let mut c: Self = parse_toml(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        resolve(base, &mut c.output_dir);
        resolve(base, &mut c.classifier);
        for e in c.corpora.standard.iter_mut().chain(c.corpora.diverse.iter_mut()) {
            resolve(base, e.path_mut());
        }
        for t in &mut c.tasks {
            resolve(base, t);
        }
        c.validate()?;
        Ok(c)
    }

    /// Checks everything that can be checked before any work starts.
    pub fn validate(&self) -> Result<()> {
        if self.seq_len < MIN_SEQ_LEN {
            return Err(Error::Config(format!("seq_len must be at least {MIN_SEQ_LEN}, got {}", self.seq_len)));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config(String::from("at least one fine-tuning seed is required")));
        }
        if self.lr_grid.is_empty()
            || self.lr_grid.iter().any(|&lr| !(lr > 0.0))
            || self.lr_grid.windows(2).any(|w| !(w[0] > w[1]))
        {
            return Err(Error::Config(format!("lr_grid must be non-empty, positive and strictly descending: {:?}", self.lr_grid)));
        }
        if self.corpora.standard.is_empty() || self.corpora.diverse.is_empty() {
            return Err(Error::Config(String::from("both a standard and a diverse corpus are required")));
        }
        self.pretrain.validate()?;
        let paths = self
            .corpora
            .standard
            .iter()
            .chain(&self.corpora.diverse)
            .map(CorpusEntry::path)
            .chain(std::iter::once(self.classifier.as_path()))
            .chain(self.tasks.iter().map(PathBuf::as_path));
        for p in paths {
            if !p.is_file() {
                return Err(Error::Config(format!("referenced file {} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

/// Loads a task spec; its data paths are resolved against the spec's
/// directory.
pub fn load_task_spec(path: &Path) -> Result<TaskSpec> {
    let mut spec: TaskSpec = parse_toml(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let fix = |s: &mut String| {
        let mut p = PathBuf::from(&*s);
        resolve(base, &mut p);
        *s = p.to_string_lossy().into_owned();
    };
    fix(&mut spec.train_path);
    fix(&mut spec.test_path);
    if let Some(d) = spec.dev_path.as_mut() {
        fix(d);
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    const MINIMAL: &str = r#"
output_dir = "out"
classifier = "clf.json"
seq_len = 64
[corpora]
standard = ["std.jsonl"]
diverse = [{ path = "bsm.jsonl", augment = true }]
"#;

    #[test]
    fn defaults_and_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        for f in ["clf.json", "std.jsonl", "bsm.jsonl"] {
            write(dir.path(), f, "");
        }
        let c = PipelineConfig::load(&write(dir.path(), "p.toml", MINIMAL)).unwrap();
        assert_eq!(c.output_dir, dir.path().join("out"));
        assert_eq!(c.seeds, [1, 2, 3]);
        assert_eq!(c.vocab_size, DEFAULT_VOCAB_SIZE);
        assert!(c.corpora.diverse[0].augment());
        assert!(!c.corpora.standard[0].augment());
        assert_eq!(c.pretrain.peak_lr(), 1e-3);
    }

    #[test]
    fn missing_corpus_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "clf.json", "");
        write(dir.path(), "std.jsonl", "");
        match PipelineConfig::load(&write(dir.path(), "p.toml", MINIMAL)) {
            Err(e @ Error::Config(_)) => {
                assert!(e.to_string().contains("bsm.jsonl"));
                assert_eq!(e.exit_code(), 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn short_sequences_rejected() {
        let dir = tempfile::tempdir().unwrap();
        for f in ["clf.json", "std.jsonl", "bsm.jsonl"] {
            write(dir.path(), f, "");
        }
        let body = MINIMAL.replace("seq_len = 64", "seq_len = 4");
        assert!(matches!(PipelineConfig::load(&write(dir.path(), "p.toml", &body)), Err(Error::Config(_))));
    }

    #[test]
    fn task_spec_paths_resolve() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "t.toml",
            "name = \"topic\"\nkind = \"sequence_classification\"\nmetric = \"accuracy\"\ndiversity_block = \"standard\"\ntrain_path = \"train.jsonl\"\ntest_path = \"/abs/test.jsonl\"\n",
        );
        let spec = load_task_spec(&p).unwrap();
        assert_eq!(PathBuf::from(&spec.train_path), dir.path().join("train.jsonl"));
        assert_eq!(spec.test_path, "/abs/test.jsonl");
        assert_eq!(spec.null_label, "O");
    }
}
