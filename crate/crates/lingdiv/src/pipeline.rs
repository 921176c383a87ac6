//! The staged end-to-end run: curate → diversity report → tokenizers →
//! fertility → pack → learning-rate probe → pretrain → fine-tune → reports.
//!
//! Every stage records the hashes of its inputs and outputs in
//! `<output_dir>/manifests/<stage>.json`; a stage whose inputs and outputs
//! still match its manifest is skipped.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use lingdiv_core::corpus::{augment_time_and_author, Corpus, Regime};
use lingdiv_core::curation::{deduplicate, normalize_and_filter, DedupReport};
use lingdiv_core::diversity::source_diversity_report;
use lingdiv_core::encoder::{
    lr_at, lr_stability_probe, select_best_checkpoint, train, Encoder, ProbeConfig, TrainConfig,
};
use lingdiv_core::eval::{
    aggregate, dialect_breakdown, evaluate, finetune, DialectPrediction, EvalRecord, TaskExample, TaskKind, TaskSpec,
};
use lingdiv_core::packing::{pack_documents, PackedSequence};
use lingdiv_core::tokenizer::{fertility_matrix, train_bpe, SubwordTokenizer};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{CurationConfig, FinetuneSection, PipelineConfig, PretrainConfig};
use crate::error::{Error, Result};
use crate::io::{
    self, load_corpus, load_task_examples, read_bytes, read_checkpoint, read_jsonl, read_packed, read_tokenizer,
    write_checkpoint, write_corpus, write_json, write_jsonl, write_packed, write_tokenizer, CheckpointFile,
    LoadReport, TrainLogEntry,
};
use crate::report::{diversity_tsv, probe_tsv, twin_paths, write_twins};

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn hash_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&read_bytes(path)?))
}

fn hash_value<T: Serialize>(value: &T) -> String {
    sha256_hex(serde_json::to_string(value).expect("serializable").as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub inputs: BTreeMap<String, String>,
    /// Output paths relative to the output directory.
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageOutcome {
    pub stage: String,
    /// `false` when the manifest matched and the stage was skipped.
    pub ran: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct PipelineSummary {
    pub stages: Vec<StageOutcome>,
}

impl PipelineSummary {
    pub fn ran(&self) -> usize {
        self.stages.iter().filter(|s| s.ran).count()
    }
}

struct Runner {
    out: PathBuf,
    summary: PipelineSummary,
}

impl Runner {
    fn path(&self, rel: &str) -> PathBuf {
        self.out.join(rel)
    }

    fn manifest_path(&self, stage: &str) -> PathBuf {
        self.out.join("manifests").join(format!("{stage}.json"))
    }

    fn is_current(&self, stage: &str, inputs: &BTreeMap<String, String>, outputs: &[String]) -> bool {
        let Ok(m) = io::read_json::<Manifest>(&self.manifest_path(stage)) else { return false };
        m.inputs == *inputs
            && m.outputs.len() == outputs.len()
            && outputs.iter().all(|o| {
                m.outputs.get(o).is_some_and(|h| hash_file(&self.path(o)).is_ok_and(|actual| actual == *h))
            })
    }

    /// Runs `work` unless the manifest shows identical inputs and intact
    /// outputs. Failures are tagged with the stage name.
    fn stage(
        &mut self,
        stage: &str,
        inputs: BTreeMap<String, String>,
        outputs: Vec<String>,
        work: impl FnOnce(&Self) -> Result<()>,
    ) -> Result<()> {
        let tag = |e: Error| Error::Stage { stage: stage.to_string(), source: Box::new(e) };
        if self.is_current(stage, &inputs, &outputs) {
            eprintln!("[{stage}] up to date");
            self.summary.stages.push(StageOutcome { stage: stage.into(), ran: false });
            return Ok(());
        }
        eprintln!("[{stage}] running");
        work(self).map_err(tag)?;
        let outputs = outputs
            .into_iter()
            .map(|o| Ok((hash_file(&self.path(&o)).map_err(tag)?, o)))
            .map(|r: Result<_>| r.map(|(h, o)| (o, h)))
            .collect::<Result<_>>()?;
        write_json(&self.manifest_path(stage), &Manifest { stage: stage.into(), inputs, outputs }).map_err(tag)?;
        self.summary.stages.push(StageOutcome { stage: stage.into(), ran: true });
        Ok(())
    }
}

fn inputs_of(files: &[(String, PathBuf)], params: &[(&str, String)]) -> Result<BTreeMap<String, String>> {
    let mut m = BTreeMap::new();
    for (k, p) in files {
        m.insert(k.clone(), hash_file(p)?);
    }
    for (k, v) in params {
        m.insert(format!("param:{k}"), v.clone());
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurationSummary {
    pub regime: Regime,
    pub loaded: Vec<(String, LoadReport)>,
    pub after_filter: usize,
    pub dedup: DedupReport,
}

/// Normalizes, drops short documents and deduplicates.
pub fn curate(corpus: &Corpus, config: &CurationConfig) -> Result<(Corpus, DedupReport)> {
    let filtered = normalize_and_filter(corpus, config.min_words);
    Ok(deduplicate(&filtered, config.near_threshold)?)
}

/// Every tenth document (indices 9, 19, …) is held out for fertility.
pub fn fertility_split(corpus: &Corpus) -> (Corpus, Corpus) {
    let (mut train, mut held) = (Vec::new(), Vec::new());
    for (i, d) in corpus.documents.iter().enumerate() {
        if i % 10 == 9 { &mut held } else { &mut train }.push(d.clone());
    }
    let mk = |docs| Corpus { name: corpus.name.clone(), regime: corpus.regime, documents: docs };
    (mk(train), mk(held))
}

/// The last `fraction` of sequences (at least one) for validation, the
/// rest (optionally capped) for training.
pub fn split_validation(
    seqs: &[PackedSequence],
    fraction: f64,
    cap: Option<usize>,
) -> Result<(&[PackedSequence], &[PackedSequence])> {
    let n_val = ((seqs.len() as f64 * fraction).round() as usize).max(1);
    if seqs.len() <= n_val {
        return Err(Error::Config(format!("{} packed sequences are too few to hold out {n_val} for validation", seqs.len())));
    }
    let (train, val) = seqs.split_at(seqs.len() - n_val);
    Ok((&train[..cap.unwrap_or(train.len()).min(train.len())], val))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainSummary {
    pub name: String,
    pub train_sequences: usize,
    pub validation_sequences: usize,
    pub steps: usize,
    pub peak_lr: f64,
    pub initial_loss: f64,
    pub final_epoch_loss: f64,
    pub val_losses: Vec<(usize, f64)>,
    pub best_epoch: usize,
    pub exploded: bool,
}

pub struct PretrainResult {
    pub best: CheckpointFile,
    pub log: Vec<TrainLogEntry>,
    pub summary: PretrainSummary,
}

pub fn pretrain(
    name: &str,
    config: &PretrainConfig,
    vocab_size: usize,
    seq_len: usize,
    train_seqs: &[PackedSequence],
    val_seqs: &[PackedSequence],
) -> Result<PretrainResult> {
    let enc_config = config.encoder_config(vocab_size, seq_len)?;
    let encoder = Encoder::<f32>::init(enc_config, config.seed)?;
    let tc = TrainConfig {
        epochs: config.epochs,
        peak_lr: config.peak_lr(),
        batch_size: config.batch_size,
        seed: config.seed,
        ..TrainConfig::default()
    };
    let outcome = train(encoder, train_seqs, val_seqs, &tc)?;
    let st = &outcome.state;
    if st.exploded || outcome.checkpoints.is_empty() {
        return Err(Error::Core(lingdiv_core::Error::Training(format!(
            "`{name}` diverged at step {} (grad norm {:?})",
            st.step,
            st.grad_norm_history.last()
        ))));
    }
    let log: Vec<TrainLogEntry> = st
        .train_loss_history
        .iter()
        .zip(&st.grad_norm_history)
        .enumerate()
        .map(|(i, (&loss, &grad_norm))| TrainLogEntry {
            step: i + 1,
            lr: lr_at(i, st.total_steps, st.warmup_steps, st.peak_lr),
            loss,
            grad_norm,
        })
        .collect();
    let best_epoch = select_best_checkpoint(st)?;
    let best = outcome.checkpoints.iter().find(|c| c.epoch == best_epoch).expect("checkpoint per epoch");
    let per_epoch = log.len() / config.epochs.max(1);
    let last = &st.train_loss_history[log.len() - per_epoch..];
    let summary = PretrainSummary {
        name: name.into(),
        train_sequences: train_seqs.len(),
        validation_sequences: val_seqs.len(),
        steps: st.step,
        peak_lr: st.peak_lr,
        initial_loss: st.train_loss_history[0],
        final_epoch_loss: last.iter().sum::<f64>() / last.len() as f64,
        val_losses: st.val_loss_history.clone(),
        best_epoch,
        exploded: false,
    };
    let best = CheckpointFile { encoder: best.encoder.clone(), epoch: best.epoch, step: best.step, val_loss: best.val_loss };
    Ok(PretrainResult { best, log, summary })
}

/// Fine-tunes and evaluates `spec` for every seed. Dialect-tagged test
/// items also yield per-item predictions (pooled over seeds).
pub fn run_task(
    model: &str,
    checkpoint: &Encoder<f32>,
    tokenizer: &SubwordTokenizer,
    spec: &TaskSpec,
    seeds: &[u64],
    section: &FinetuneSection,
) -> Result<(Vec<EvalRecord>, Vec<DialectPrediction>)> {
    let train_set = load_task_examples(Path::new(&spec.train_path), spec.kind)?;
    let test_set = load_task_examples(Path::new(&spec.test_path), spec.kind)?;
    let mut records = Vec::new();
    let mut dialect = Vec::new();
    for &seed in seeds {
        let m = finetune(checkpoint, tokenizer, spec.kind, &train_set, &section.config(seed))?;
        let ev = evaluate(&m, tokenizer, &test_set, spec.metric, &spec.null_label)?;
        records.push(EvalRecord { model: model.into(), task: spec.name.clone(), seed, score: ev.score, block: spec.diversity_block });
        if spec.kind != TaskKind::TokenLabeling {
            for (ex, pred) in test_set.iter().zip(&ev.predictions) {
                if let Some(d) = &ex.dialect {
                    dialect.push(DialectPrediction {
                        model: model.into(),
                        dialect: d.clone(),
                        gold: TaskExample::gold_labels(ex)[0].to_string(),
                        predicted: pred[0].clone(),
                    });
                }
            }
        }
    }
    Ok((records, dialect))
}

const REGIMES: [Regime; 3] = [Regime::Standard, Regime::Diverse, Regime::Both];

fn load_regime(config: &PipelineConfig, regime: Regime) -> Result<(Corpus, Vec<(String, LoadReport)>)> {
    let entries = match regime {
        Regime::Standard => &config.corpora.standard,
        _ => &config.corpora.diverse,
    };
    let mut parts = Vec::new();
    let mut loaded = Vec::new();
    for e in entries {
        let name = io::corpus_name(e.path());
        let (c, report) = load_corpus(e.path(), &name, regime)?;
        if report.malformed > 0 {
            eprintln!("warning: {}: {} malformed line(s) skipped", e.path().display(), report.malformed);
        }
        loaded.push((name, report));
        parts.push(if e.augment() { augment_time_and_author(&c)? } else { c });
    }
    Ok((Corpus::concat(regime.as_str(), regime, &parts)?, loaded))
}

fn regime_corpus(out: &Runner, regime: Regime) -> Result<Corpus> {
    let load = |r: Regime| load_corpus(&out.path(&format!("curated/{r}.jsonl")), r.as_str(), r).map(|(c, _)| c);
    match regime {
        Regime::Both => Ok(Corpus::both("both", &load(Regime::Standard)?, &load(Regime::Diverse)?)?),
        r => load(r),
    }
}

/// Runs (or resumes) the whole pipeline. Prior artifacts are kept when a
/// stage fails.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineSummary> {
    config.validate()?;
    let mut r = Runner { out: config.output_dir.clone(), summary: PipelineSummary::default() };
    let curated = |reg: Regime| format!("curated/{reg}.jsonl");
    let tok = |reg: Regime| format!("tokenizers/{reg}.json");
    let packed = |reg: Regime| format!("packed/{reg}.bin");
    let ckpt = |reg: Regime| format!("checkpoints/{reg}.ckpt");
    let files = |r: &Runner, rels: &[String]| -> Vec<(String, PathBuf)> {
        rels.iter().map(|rel| (rel.clone(), r.path(rel))).collect()
    };

    // curate
    let mut corpus_files = Vec::new();
    for (reg, entries) in [("standard", &config.corpora.standard), ("diverse", &config.corpora.diverse)] {
        for (i, e) in entries.iter().enumerate() {
            corpus_files.push((format!("corpus:{reg}:{i}:augment={}", e.augment()), e.path().to_path_buf()));
        }
    }
    let inputs = inputs_of(&corpus_files, &[("curation", hash_value(&config.curation))])?;
    let outputs = vec![curated(Regime::Standard), curated(Regime::Diverse), "reports/curation.json".into()];
    r.stage("curate", inputs, outputs, |r| {
        let mut summaries = Vec::new();
        for reg in [Regime::Standard, Regime::Diverse] {
            let (raw, loaded) = load_regime(config, reg)?;
            let filtered = normalize_and_filter(&raw, config.curation.min_words).len();
            let (clean, dedup) = curate(&raw, &config.curation)?;
            write_corpus(&r.path(&curated(reg)), &clean)?;
            summaries.push(CurationSummary { regime: reg, loaded, after_filter: filtered, dedup });
        }
        write_json(&r.path("reports/curation.json"), &summaries)
    })?;

    // diversity
    let cur_files = files(&r, &[curated(Regime::Standard), curated(Regime::Diverse)]);
    let mut f = cur_files.clone();
    f.push(("classifier".into(), config.classifier.clone()));
    let outputs = vec!["reports/diversity.tsv".into(), "reports/diversity.json".into()];
    r.stage("diversity", inputs_of(&f, &[])?, outputs, |r| {
        let classifier = io::read_classifier(&config.classifier)?;
        let corpora = [regime_corpus(r, Regime::Standard)?, regime_corpus(r, Regime::Diverse)?];
        let rows = source_diversity_report(&classifier, &corpora)?;
        write_twins(&r.path("reports/diversity"), &diversity_tsv(&rows), &rows)
    })?;

    // tokenizers
    let outputs: Vec<String> = REGIMES.iter().map(|&g| tok(g)).collect();
    r.stage("tokenizers", inputs_of(&cur_files, &[("vocab_size", config.vocab_size.to_string())])?, outputs, |r| {
        for reg in REGIMES {
            let (train_part, _) = fertility_split(&regime_corpus(r, reg)?);
            write_tokenizer(&r.path(&tok(reg)), &train_bpe(&train_part, config.vocab_size)?)?;
        }
        Ok(())
    })?;

    // fertility
    let tok_files = files(&r, &REGIMES.map(tok));
    let f: Vec<_> = cur_files.iter().chain(&tok_files).cloned().collect();
    let outputs = vec!["reports/fertility.tsv".into(), "reports/fertility.json".into()];
    r.stage("fertility", inputs_of(&f, &[])?, outputs, |r| {
        let toks = REGIMES.iter().map(|&g| read_tokenizer(&r.path(&tok(g)))).collect::<Result<Vec<_>>>()?;
        let held = REGIMES.iter().map(|&g| Ok(fertility_split(&regime_corpus(r, g)?).1)).collect::<Result<Vec<_>>>()?;
        let rows: Vec<(String, &SubwordTokenizer)> = REGIMES.iter().map(|g| g.to_string()).zip(&toks).collect();
        let cols: Vec<(String, &Corpus)> = REGIMES.iter().map(|g| g.to_string()).zip(&held).collect();
        let m = fertility_matrix(&rows, &cols)?;
        write_twins(&r.path("reports/fertility"), &m.to_tsv(), &m)
    })?;

    // pack
    let f: Vec<_> = cur_files.iter().chain(&tok_files).cloned().collect();
    let outputs: Vec<String> = REGIMES.iter().map(|&g| packed(g)).chain(["reports/packing.json".into()]).collect();
    r.stage("pack", inputs_of(&f, &[("seq_len", config.seq_len.to_string())])?, outputs, |r| {
        let mut util = Vec::new();
        for reg in REGIMES {
            let tokenizer = read_tokenizer(&r.path(&tok(reg)))?;
            let docs: Vec<Vec<u32>> = regime_corpus(r, reg)?.documents.iter().map(|d| tokenizer.encode(&d.text)).collect();
            let out = pack_documents(&docs, config.seq_len)?;
            write_packed(&r.path(&packed(reg)), config.seq_len, &out.sequences)?;
            util.push((reg, out.sequences.len(), out.utilization));
        }
        write_json(&r.path("reports/packing.json"), &util)
    })?;

    // probe-lr
    let packed_files = files(&r, &REGIMES.map(packed));
    let f: Vec<_> = packed_files.iter().chain(&tok_files).cloned().collect();
    let params = [
        ("probe", hash_value(&config.probe)),
        ("pretrain", hash_value(&config.pretrain)),
        ("lr_grid", hash_value(&config.lr_grid)),
    ];
    let outputs = vec!["reports/lr_probe.tsv".into(), "reports/lr_probe.json".into()];
    r.stage("probe-lr", inputs_of(&f, &params)?, outputs, |r| {
        let vocab = read_tokenizer(&r.path(&tok(Regime::Standard)))?.vocab_size();
        let data = REGIMES.iter().map(|&g| Ok(read_packed(&r.path(&packed(g)))?.1)).collect::<Result<Vec<_>>>()?;
        let regimes: Vec<(String, &[PackedSequence])> =
            REGIMES.iter().map(|g| g.to_string()).zip(data.iter().map(Vec::as_slice)).collect();
        let same_vocab = REGIMES.iter().all(|&g| read_tokenizer(&r.path(&tok(g))).is_ok_and(|t| t.vocab_size() == vocab));
        if !same_vocab {
            return Err(Error::Config(String::from("probe needs tokenizers of equal vocabulary size")));
        }
        let enc = config.pretrain.encoder_config(vocab, config.seq_len)?;
        let probe = ProbeConfig {
            budget_steps: config.probe.budget_steps,
            batch_size: config.probe.batch_size,
            seed: config.probe.seed,
            ..ProbeConfig::default()
        };
        let report = lr_stability_probe(&enc, &regimes, &config.lr_grid, &probe)?;
        write_twins(&r.path("reports/lr_probe"), &probe_tsv(&report), &report)
    })?;

    // pretrain
    let outputs: Vec<String> = REGIMES
        .iter()
        .flat_map(|&g| [ckpt(g), format!("logs/{g}.train.jsonl")])
        .chain(["reports/pretrain.json".into()])
        .collect();
    let params = [("pretrain", hash_value(&config.pretrain)), ("seq_len", config.seq_len.to_string())];
    r.stage("pretrain", inputs_of(&f, &params)?, outputs, |r| {
        let mut summaries = Vec::new();
        for reg in REGIMES {
            let vocab = read_tokenizer(&r.path(&tok(reg)))?.vocab_size();
            let (seq_len, seqs) = read_packed(&r.path(&packed(reg)))?;
            let (train_seqs, val) = split_validation(&seqs, config.pretrain.validation_fraction, config.pretrain.max_sequences)?;
            let res = pretrain(reg.as_str(), &config.pretrain, vocab, seq_len, train_seqs, val)?;
            write_checkpoint(&r.path(&ckpt(reg)), &res.best)?;
            write_jsonl(&r.path(&format!("logs/{reg}.train.jsonl")), &res.log)?;
            summaries.push(res.summary);
        }
        write_json(&r.path("reports/pretrain.json"), &summaries)
    })?;

    // finetune
    let mut f: Vec<_> = files(&r, &REGIMES.map(ckpt)).into_iter().chain(tok_files.iter().cloned()).collect();
    let specs = config.tasks.iter().map(|p| crate::config::load_task_spec(p)).collect::<Result<Vec<_>>>()?;
    for (i, (p, s)) in config.tasks.iter().zip(&specs).enumerate() {
        f.push((format!("task:{i}"), p.clone()));
        f.push((format!("task:{i}:train"), PathBuf::from(&s.train_path)));
        f.push((format!("task:{i}:test"), PathBuf::from(&s.test_path)));
    }
    let params = [("finetune", hash_value(&config.finetune)), ("seeds", hash_value(&config.seeds))];
    let outputs = vec!["results/records.jsonl".into(), "results/dialect_predictions.jsonl".into()];
    r.stage("finetune", inputs_of(&f, &params)?, outputs, |r| {
        let mut records = Vec::new();
        let mut dialect = Vec::new();
        for reg in REGIMES {
            let model = format!("{reg}-{}", config.pretrain.size_class.as_str());
            let checkpoint = read_checkpoint(&r.path(&ckpt(reg)))?;
            let tokenizer = read_tokenizer(&r.path(&tok(reg)))?;
            for spec in &specs {
                let (rec, dia) = run_task(&model, &checkpoint.encoder, &tokenizer, spec, &config.seeds, &config.finetune)?;
                records.extend(rec);
                dialect.extend(dia);
            }
        }
        write_jsonl(&r.path("results/records.jsonl"), &records)?;
        write_jsonl(&r.path("results/dialect_predictions.jsonl"), &dialect)
    })?;

    // report
    let f = files(&r, &["results/records.jsonl".into(), "results/dialect_predictions.jsonl".into()]);
    let outputs = vec![
        "reports/benchmark.tsv".into(),
        "reports/benchmark.json".into(),
        "reports/dialect.tsv".into(),
        "reports/dialect.json".into(),
    ];
    r.stage("report", inputs_of(&f, &[])?, outputs, |r| {
        let records: Vec<EvalRecord> = read_jsonl(&r.path("results/records.jsonl"))?;
        let report = aggregate(&records)?;
        write_twins(&r.path("reports/benchmark"), &report.to_tsv(), &report)?;
        let preds: Vec<DialectPrediction> = read_jsonl(&r.path("results/dialect_predictions.jsonl"))?;
        let (tsv, json) = twin_paths(&r.path("reports/dialect"));
        if preds.is_empty() {
            io::write_atomic(&tsv, b"model\n")?;
            return io::write_atomic(&json, b"null\n");
        }
        let table = dialect_breakdown(&preds)?;
        write_twins(&r.path("reports/dialect"), &table.to_tsv(), &table)
    })?;

    Ok(r.summary)
}

/// The report files a full run produces, relative to the output directory.
pub const REPORT_FILES: [&str; 10] = [
    "reports/diversity.tsv",
    "reports/diversity.json",
    "reports/fertility.tsv",
    "reports/fertility.json",
    "reports/lr_probe.tsv",
    "reports/lr_probe.json",
    "reports/benchmark.tsv",
    "reports/benchmark.json",
    "reports/dialect.tsv",
    "reports/dialect.json",
];
