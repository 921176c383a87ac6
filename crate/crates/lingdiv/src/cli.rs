//! The `lingdiv` command line. Exit codes: 0 success, 1 invalid input or
//! configuration, 2 failure while computing.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use lingdiv_core::corpus::{source_counts, Corpus, Regime};
use lingdiv_core::diversity::{source_diversity_report, train_variety_classifier, ClassifierKind, VarietyLabel};
use lingdiv_core::encoder::{lr_stability_probe, ProbeConfig};
use lingdiv_core::eval::{aggregate, dialect_breakdown, DialectPrediction, EvalRecord};
use lingdiv_core::packing::{pack_documents, DEFAULT_SEQ_LEN};
use lingdiv_core::tokenizer::{fertility_matrix, train_bpe, SubwordTokenizer};
use serde::Deserialize;

use crate::config::{load_task_spec, CurationConfig, FinetuneSection, PipelineConfig, PretrainConfig};
use crate::error::{Error, Result};
use crate::io::{self, load_corpus, read_packed, read_tokenizer, TokenizedDoc};
use crate::pipeline::{curate, pretrain, run_pipeline, run_task, split_validation};
use crate::report::{counts_tsv, diversity_tsv, probe_tsv, write_twins, CountRow};

#[derive(Parser)]
#[command(name = "lingdiv", version, about = "Corpus diversity analysis, tokenizers and toy encoder pipelines")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Corpus statistics.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Normalize, filter and deduplicate a corpus; prints the dedup report.
    Curate {
        #[arg(long, default_value_t = lingdiv_core::curation::DEFAULT_NEAR_THRESHOLD)]
        near_threshold: f64,
        #[arg(long, default_value_t = lingdiv_core::curation::DEFAULT_MIN_WORDS)]
        min_words: usize,
        input: PathBuf,
        output: PathBuf,
    },
    /// Variety classifier training and the per-source diversity report.
    #[command(subcommand)]
    Diversity(DiversityCmd),
    /// BPE training, encoding and fertility.
    #[command(subcommand)]
    Tokenizer(TokenizerCmd),
    /// Pack a tokenized corpus into fixed-length sequences.
    Pack {
        #[arg(long, default_value_t = DEFAULT_SEQ_LEN)]
        seq_len: usize,
        input: PathBuf,
        output: PathBuf,
    },
    /// Pretrain an encoder with masked language modelling.
    Pretrain(PretrainArgs),
    /// Learning-rate stability probe over one or more packed datasets.
    ProbeLr(ProbeArgs),
    /// Fine-tune and evaluate a checkpoint on a task for several seeds.
    Finetune(FinetuneArgs),
    /// Aggregate evaluation records into the benchmark table.
    Report {
        records: PathBuf,
        /// Dialect-tagged predictions for the per-dialect table.
        #[arg(long)]
        dialect: Option<PathBuf>,
        /// Also write `<prefix>.tsv` / `<prefix>.json` (and `<prefix>.dialect.*`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every stage from one configuration file.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write the synthetic fixture set.
    Fixtures { dir: PathBuf },
}

#[derive(Subcommand)]
enum CorpusCmd {
    /// Documents and words per source.
    Stats {
        paths: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum DiversityCmd {
    /// Train a classifier from JSON lines of `{"text", "label"}`.
    Train {
        #[arg(long, default_value = "char_ngram_linear")]
        kind: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        labeled: PathBuf,
        output: PathBuf,
    },
    /// Per-source diversity, ascending.
    Report {
        #[arg(long)]
        classifier: PathBuf,
        corpora: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum TokenizerCmd {
    Train {
        #[arg(long, default_value_t = lingdiv_core::tokenizer::DEFAULT_VOCAB_SIZE)]
        vocab_size: usize,
        corpus: PathBuf,
        output: PathBuf,
    },
    /// Tokenize a corpus into JSON lines of `{"id", "ids"}`.
    Encode {
        #[arg(long)]
        tokenizer: PathBuf,
        corpus: PathBuf,
        output: PathBuf,
    },
    /// Fertility of every tokenizer on every corpus.
    Fertility {
        tokenizers: Vec<PathBuf>,
        #[arg(long = "on", required = true, num_args = 1..)]
        on: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct PretrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Vocabulary size; read from the tokenizer when given instead.
    #[arg(long, required_unless_present = "tokenizer")]
    vocab_size: Option<usize>,
    #[arg(long)]
    tokenizer: Option<PathBuf>,
    /// Best checkpoint by validation loss.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// `name=path` pairs of packed datasets.
    #[arg(long = "data", required = true, num_args = 1..)]
    data: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    grid: Vec<f64>,
    #[arg(long)]
    vocab_size: usize,
    #[arg(long, default_value_t = 40)]
    budget_steps: usize,
    #[arg(long, default_value_t = 8)]
    batch_size: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FinetuneArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    tokenizer: PathBuf,
    #[arg(long)]
    task: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    seeds: Vec<u64>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Model name written into the records; defaults to the checkpoint stem.
    #[arg(long)]
    model: Option<String>,
    /// Evaluation records as JSON lines.
    #[arg(long)]
    records: PathBuf,
    #[arg(long)]
    predictions: Option<PathBuf>,
}

fn print_or_twin<T: serde::Serialize + ?Sized>(tsv: &str, json: &T, out: Option<&Path>) -> Result<()> {
    print!("{tsv}");
    match out {
        Some(prefix) => write_twins(prefix, tsv, json),
        None => Ok(()),
    }
}

fn load_any(path: &Path) -> Result<Corpus> {
    Ok(load_corpus(path, &io::corpus_name(path), Regime::Standard)?.0)
}

#[derive(Deserialize)]
struct LabeledLine {
    text: String,
    label: VarietyLabel,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Corpus(CorpusCmd::Stats { paths, out }) => {
            let corpora = paths.iter().map(|p| load_any(p)).collect::<Result<Vec<_>>>()?;
            let rows: Vec<CountRow> = source_counts(&corpora)
                .into_iter()
                .map(|(source, docs, words)| CountRow { source, docs, words })
                .collect();
            print_or_twin(&counts_tsv(&rows), &rows, out.as_deref())
        }
        Command::Curate { near_threshold, min_words, input, output } => {
            let corpus = load_any(&input)?;
            let (clean, report) = curate(&corpus, &CurationConfig { near_threshold, min_words })?;
            io::write_corpus(&output, &clean)?;
            print!("{}", io::to_json_string(&report));
            Ok(())
        }
        Command::Diversity(DiversityCmd::Train { kind, seed, labeled, output }) => {
            let lines: Vec<LabeledLine> = io::read_jsonl(&labeled)?;
            let pairs: Vec<(String, VarietyLabel)> = lines.into_iter().map(|l| (l.text, l.label)).collect();
            let clf = train_variety_classifier(&pairs, ClassifierKind::parse(&kind)?, seed)?;
            io::write_json(&output, &clf)
        }
        Command::Diversity(DiversityCmd::Report { classifier, corpora, out }) => {
            let clf = io::read_classifier(&classifier)?;
            let corpora = corpora.iter().map(|p| load_any(p)).collect::<Result<Vec<_>>>()?;
            let rows = source_diversity_report(&clf, &corpora)?;
            print_or_twin(&diversity_tsv(&rows), &rows, out.as_deref())
        }
        Command::Tokenizer(TokenizerCmd::Train { vocab_size, corpus, output }) => {
            let tok = train_bpe(&load_any(&corpus)?, vocab_size)?;
            io::write_tokenizer(&output, &tok)?;
            eprintln!("vocabulary of {} tokens, {} merges", tok.vocab_size(), tok.merges().len());
            Ok(())
        }
        Command::Tokenizer(TokenizerCmd::Encode { tokenizer, corpus, output }) => {
            let tok = read_tokenizer(&tokenizer)?;
            io::write_jsonl(&output, &io::tokenize_corpus(&tok, &load_any(&corpus)?))
        }
        Command::Tokenizer(TokenizerCmd::Fertility { tokenizers, on, out }) => {
            let toks = tokenizers.iter().map(|p| read_tokenizer(p)).collect::<Result<Vec<_>>>()?;
            let corpora = on.iter().map(|p| load_any(p)).collect::<Result<Vec<_>>>()?;
            let rows: Vec<(String, &SubwordTokenizer)> = tokenizers.iter().map(|p| io::corpus_name(p)).zip(&toks).collect();
            let cols: Vec<(String, &Corpus)> = corpora.iter().map(|c| c.name.clone()).zip(&corpora).collect();
            let m = fertility_matrix(&rows, &cols)?;
            print_or_twin(&m.to_tsv(), &m, out.as_deref())
        }
        Command::Pack { seq_len, input, output } => {
            let docs: Vec<TokenizedDoc> = io::read_jsonl(&input)?;
            let ids: Vec<Vec<u32>> = docs.into_iter().map(|d| d.ids).collect();
            let packed = pack_documents(&ids, seq_len)?;
            io::write_packed(&output, seq_len, &packed.sequences)?;
            println!("{{\"sequences\": {}, \"utilization\": {:.6}}}", packed.sequences.len(), packed.utilization);
            Ok(())
        }
        Command::Pretrain(a) => {
            let mut cfg = match &a.config {
                Some(p) => PretrainConfig::load(p)?,
                None => PretrainConfig::default(),
            };
            cfg.lr = a.lr.or(cfg.lr);
            cfg.epochs = a.epochs.unwrap_or(cfg.epochs);
            cfg.seed = a.seed.unwrap_or(cfg.seed);
            cfg.validate()?;
            let vocab = match (&a.tokenizer, a.vocab_size) {
                (Some(t), _) => read_tokenizer(t)?.vocab_size(),
                (None, Some(v)) => v,
                (None, None) => unreachable!("clap requires one of them"),
            };
            let (seq_len, seqs) = read_packed(&a.data)?;
            let (train_seqs, val) = split_validation(&seqs, cfg.validation_fraction, cfg.max_sequences)?;
            let res = pretrain(&io::corpus_name(&a.data), &cfg, vocab, seq_len, train_seqs, val)?;
            io::write_checkpoint(&a.out, &res.best)?;
            if let Some(log) = &a.log {
                io::write_jsonl(log, &res.log)?;
            }
            print!("{}", io::to_json_string(&res.summary));
            Ok(())
        }
        Command::ProbeLr(a) => {
            let cfg = match &a.config {
                Some(p) => PretrainConfig::load(p)?,
                None => PretrainConfig::default(),
            };
            let mut data = Vec::new();
            let mut seq_len = 0;
            for spec in &a.data {
                let (name, path) = spec
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("--data expects name=path, got `{spec}`")))?;
                let (l, seqs) = read_packed(Path::new(path))?;
                seq_len = seq_len.max(l);
                data.push((name.to_string(), seqs));
            }
            let regimes: Vec<(String, &[_])> = data.iter().map(|(n, s)| (n.clone(), s.as_slice())).collect();
            let probe =
                ProbeConfig { budget_steps: a.budget_steps, batch_size: a.batch_size, seed: a.seed, ..ProbeConfig::default() };
            let report = lr_stability_probe(&cfg.encoder_config(a.vocab_size, seq_len)?, &regimes, &a.grid, &probe)?;
            print_or_twin(&probe_tsv(&report), &report, a.out.as_deref())
        }
        Command::Finetune(a) => {
            let spec = load_task_spec(&a.task)?;
            let ckpt = io::read_checkpoint(&a.checkpoint)?;
            let tok = read_tokenizer(&a.tokenizer)?;
            let mut section = FinetuneSection::default();
            section.lr = a.lr.unwrap_or(section.lr);
            section.epochs = a.epochs.unwrap_or(section.epochs);
            let model = a.model.clone().unwrap_or_else(|| io::corpus_name(&a.checkpoint));
            let (records, preds) = run_task(&model, &ckpt.encoder, &tok, &spec, &a.seeds, &section)?;
            for r in &records {
                println!("{}\t{}\t{}\t{:.2}", r.model, r.task, r.seed, r.score);
            }
            io::write_jsonl(&a.records, &records)?;
            if let Some(p) = &a.predictions {
                io::write_jsonl(p, &preds)?;
            }
            Ok(())
        }
        Command::Report { records, dialect, out } => {
            let recs: Vec<EvalRecord> = io::read_jsonl(&records)?;
            let report = aggregate(&recs)?;
            print_or_twin(&report.to_tsv(), &report, out.as_deref())?;
            if let Some(d) = dialect {
                let preds: Vec<DialectPrediction> = io::read_jsonl(&d)?;
                let table = dialect_breakdown(&preds)?;
                println!();
                let prefix = out.map(|o| {
                    let mut s = o.into_os_string();
                    s.push(".dialect");
                    PathBuf::from(s)
                });
                print_or_twin(&table.to_tsv(), &table, prefix.as_deref())?;
            }
            Ok(())
        }
        Command::Pipeline { config } => {
            let cfg = PipelineConfig::load(&config)?;
            let summary = run_pipeline(&cfg)?;
            eprintln!("{} of {} stages ran", summary.ran(), summary.stages.len());
            Ok(())
        }
        Command::Fixtures { dir } => crate::fixtures::write_fixtures(&dir),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
