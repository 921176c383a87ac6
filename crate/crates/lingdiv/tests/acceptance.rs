//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use lingdiv::fixtures::{PUBLISHED_AVERAGES, PUBLISHED_DIALECT_COUNTS, PUBLISHED_MODELS};
use lingdiv::io::{read_jsonl, tokenize_corpus};
use lingdiv::report::{diversity_tsv, probe_tsv};
use lingdiv_core::corpus::{Corpus, Document, Regime};
use lingdiv_core::diversity::{source_diversity_report, train_variety_classifier, ClassifierKind};
use lingdiv_core::encoder::{
    gradient_check, lr_stability_probe, random_check_config, select_best_checkpoint, train, Encoder, EncoderConfig,
    ProbeConfig, ProbeOutcome, SizeClass, TrainConfig,
};
use lingdiv_core::eval::{
    aggregate, dialect_breakdown, evaluate, Dialect, finetune, DialectPrediction, EvalRecord, FinetuneConfig, Metric, TaskInput,
    TaskKind,
};
use lingdiv_core::packing::{
    mask_sequences, pack_documents, pack_sequences, MaskingConfig, PackedSequence, Replacement,
};
use lingdiv_core::rng;
use lingdiv_core::stats::mean_std;
use lingdiv_core::synth::{separable_task, LanguageModel, SourceSpec, SynthConfig};
use lingdiv_core::tokenizer::{fertility_matrix, specials, train_bpe, SubwordTokenizer};
use rand::Rng as _;

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

// 1 -------------------------------------------------------------------------

const INJECTED: [(&str, f64); 4] = [("wiki", 0.001), ("oscar", 0.018), ("bsm", 0.14), ("ekc", 0.733)];

/// Returns the report TSV.
fn diversity_oracle() -> Result<String, String> {
    let lm = LanguageModel::new(&SynthConfig::default(), 1);
    let clf = train_variety_classifier(&lm.labeled_sentences(2000, 11), ClassifierKind::CharNgramLinear, 1).map_err(e)?;
    let mut corpora = Vec::new();
    for (i, (name, p)) in INJECTED.iter().enumerate() {
        let src = lm.source(&SourceSpec::new(name, 100, 30, *p), Regime::Standard, 20 + i as u64).map_err(e)?;
        check((src.true_mean_diversity() - p).abs() < 0.002, || format!("{name}: generator injected {}", src.true_mean_diversity()))?;
        corpora.push(src.corpus);
    }
    // shuffled input order; the report must sort it back
    let order = [2, 0, 3, 1];
    let shuffled: Vec<Corpus> = order.iter().map(|&i| corpora[i].clone()).collect();
    let rows = source_diversity_report(&clf, &shuffled).map_err(e)?;
    let names: Vec<&str> = rows.iter().map(|r| r.source.as_str()).collect();
    let want: Vec<&str> = INJECTED.iter().map(|x| x.0).collect();
    check(names == want, || format!("report order {names:?}, injected order {want:?}"))?;
    for (row, (_, p)) in rows.iter().zip(INJECTED) {
        check((row.diversity_mean - p).abs() <= 0.02, || format!("{}: measured {:.4}, injected {p}", row.source, row.diversity_mean))?;
    }
    Ok(diversity_tsv(&rows))
}

fn criterion_1() -> Outcome {
    let tsv = diversity_oracle()?;
    let means: Vec<String> = tsv.lines().skip(1).map(|l| l.split('\t').nth(3).unwrap().to_string()).collect();
    Ok(format!("measured {}", means.join(" / ")))
}

// 2 -------------------------------------------------------------------------

fn criterion_2() -> Outcome {
    let records: Vec<EvalRecord> = read_jsonl(&fixtures_dir().join("tables/benchmark_records.jsonl")).map_err(e)?;
    let report = aggregate(&records).map_err(e)?;
    check(report.tasks.len() == 15, || format!("{} tasks", report.tasks.len()))?;
    let mut worst = 0.0f64;
    for (name, (s, d, o)) in PUBLISHED_MODELS.iter().zip(PUBLISHED_AVERAGES) {
        let m = report.model(name).ok_or_else(|| format!("model {name} missing"))?;
        let got = [m.avg_standard.unwrap_or(f64::NAN), m.avg_diverse.unwrap_or(f64::NAN), m.avg_overall];
        for (g, w) in got.iter().zip([s, d, o]) {
            let diff = (g - w).abs();
            check(diff <= 0.01 + 1e-9, || format!("{name}: {g:.4} vs published {w}"))?;
            worst = worst.max(diff);
        }
    }
    let large = report.model("combined-large").unwrap();
    Ok(format!(
        "9 columns, max |diff| {worst:.4}; combined-large {:.2} / {:.2} / {:.2}",
        large.avg_standard.unwrap(),
        large.avg_diverse.unwrap(),
        large.avg_overall
    ))
}

// 3 -------------------------------------------------------------------------

const REGIMES: [&str; 3] = ["standard", "diverse", "both"];

fn regime_corpus(lm: &LanguageModel, regime: &str, seed: u64) -> Result<Corpus, String> {
    let std_src = || lm.source(&SourceSpec::new("standard", 150, 20, 0.0), Regime::Standard, seed).map(|s| s.corpus);
    let div_src = || lm.source(&SourceSpec::new("diverse", 150, 20, 0.7), Regime::Diverse, seed + 1).map(|s| s.corpus);
    let c = match regime {
        "standard" => std_src().map_err(e)?,
        "diverse" => div_src().map_err(e)?,
        _ => {
            let (a, b) = (std_src().map_err(e)?, div_src().map_err(e)?);
            let docs: Vec<Document> = a
                .documents
                .into_iter()
                .step_by(2)
                .chain(b.documents.into_iter().step_by(2))
                .collect();
            Corpus::new("both", Regime::Standard, docs).map_err(e)?
        }
    };
    Ok(Corpus { name: regime.to_string(), ..c })
}

/// Returns the fertility TSV.
fn fertility_dominance() -> Result<String, String> {
    let lm = LanguageModel::new(&SynthConfig::default(), 3);
    let mut toks = Vec::new();
    for r in REGIMES {
        toks.push(train_bpe(&regime_corpus(&lm, r, 100)?, 1000).map_err(e)?);
    }
    let held_out: Vec<Corpus> = REGIMES.iter().map(|r| regime_corpus(&lm, r, 200)).collect::<Result<_, _>>()?;
    let rows: Vec<(String, &SubwordTokenizer)> = REGIMES.iter().map(|r| r.to_string()).zip(&toks).collect();
    let cols: Vec<(String, &Corpus)> = REGIMES.iter().map(|r| r.to_string()).zip(&held_out).collect();
    let m = fertility_matrix(&rows, &cols).map_err(e)?;
    for c in 0..3 {
        let min = (0..3).map(|r| m.cells[r][c]).fold(f64::INFINITY, f64::min);
        check(m.cells[c][c] <= min + 0.01, || format!("column {}: matching tokenizer {:.4}, min {min:.4}", REGIMES[c], m.cells[c][c]))?;
        check(m.column_argmax(c) != 2, || format!("column {}: `both` tokenizer is the maximum", REGIMES[c]))?;
    }
    Ok(m.to_tsv())
}

fn criterion_3() -> Outcome {
    let tsv = fertility_dominance()?;
    let diag: Vec<String> = tsv.lines().skip(1).enumerate().map(|(i, l)| l.split('\t').nth(i + 1).unwrap().to_string()).collect();
    Ok(format!("diagonal {}", diag.join(" / ")))
}

// 4 -------------------------------------------------------------------------

fn check_sequences(seqs: &[PackedSequence], seq_len: usize) -> Result<(), String> {
    for (k, s) in seqs.iter().enumerate() {
        check(s.token_ids.len() == seq_len, || format!("sequence {k} has length {}", s.token_ids.len()))?;
        let real = seq_len - s.pad_count;
        check(s.token_ids[real..].iter().all(|&t| t == specials::PAD), || format!("sequence {k}: padding tail has a token"))?;
        check(!s.token_ids[..real].contains(&specials::PAD), || format!("sequence {k}: padding before the tail"))?;
    }
    Ok(())
}

fn criterion_4() -> Outcome {
    const L: usize = 512;
    let mut r = rng::seeded(4);
    let tok = |r: &mut rng::Rng| r.gen_range(specials::COUNT as u32..30_000);

    // fragments already within one sequence: order-preserving multiset check
    let frags: Vec<Vec<u32>> = (0..10_000).map(|_| (0..r.gen_range(20..=510)).map(|_| tok(&mut r)).collect()).collect();
    let out = pack_sequences(&frags, L).map_err(e)?;
    check_sequences(&out.sequences, L)?;
    let mut seen: Vec<&[u32]> = out.sequences.iter().flat_map(|s| s.payloads()).collect();
    let mut want: Vec<&[u32]> = frags.iter().map(Vec::as_slice).collect();
    seen.sort();
    want.sort();
    check(seen == want, || String::from("fragments not conserved"))?;
    check(out.utilization >= 0.90, || format!("utilization {:.4}", out.utilization))?;

    // whole documents, including ones that must be chunked
    let docs: Vec<Vec<u32>> = (0..10_000).map(|_| (0..r.gen_range(1..=1500)).map(|_| tok(&mut r)).collect()).collect();
    let packed = pack_documents(&docs, L).map_err(e)?;
    check_sequences(&packed.sequences, L)?;
    let total_in: usize = docs.iter().map(Vec::len).sum();
    let payload: usize = packed.sequences.iter().flat_map(|s| s.payloads()).map(<[u32]>::len).sum();
    check(total_in == payload, || format!("{total_in} tokens in, {payload} packed"))?;
    let mut count_in: BTreeMap<u32, usize> = BTreeMap::new();
    docs.iter().flatten().for_each(|&t| *count_in.entry(t).or_default() += 1);
    let mut count_out: BTreeMap<u32, usize> = BTreeMap::new();
    packed.sequences.iter().flat_map(|s| s.payloads()).flatten().for_each(|&t| *count_out.entry(t).or_default() += 1);
    check(count_in == count_out, || String::from("document tokens not conserved"))?;
    Ok(format!(
        "{} + {} sequences, utilization {:.4} on [20, 510] fragments",
        out.sequences.len(),
        packed.sequences.len(),
        out.utilization
    ))
}

// 5 -------------------------------------------------------------------------

fn criterion_5() -> Outcome {
    let mut r = rng::seeded(5);
    let vocab = 8000;
    let frags: Vec<Vec<u32>> = (0..2000).map(|_| (0..510).map(|_| r.gen_range(specials::COUNT as u32..vocab)).collect()).collect();
    let seqs = pack_sequences(&frags, 512).map_err(e)?.sequences;
    let candidates = 2000 * 510;
    let batch = mask_sequences(&seqs, &MaskingConfig::default(), 5, vocab as usize).map_err(e)?;
    let masked = batch.masked_count();
    let rate = masked as f64 / candidates as f64;
    let share = |k: Replacement| {
        batch.rows.iter().flat_map(|row| &row.replacements).filter(|&&x| x == k).count() as f64 / masked as f64
    };
    let (m, rnd, u) = (share(Replacement::Mask), share(Replacement::Random), share(Replacement::Unchanged));
    for row in &batch.rows {
        for &p in &row.mask_positions {
            check(!specials::is_special(row.targets[p]), || String::from("special token selected"))?;
        }
    }
    check((rate - 0.15).abs() <= 0.002, || format!("selection rate {rate:.5}"))?;
    check((m - 0.8).abs() <= 0.01 && (rnd - 0.1).abs() <= 0.01 && (u - 0.1).abs() <= 0.01, || {
        format!("split {m:.4}/{rnd:.4}/{u:.4}")
    })?;
    Ok(format!("{candidates} candidates, rate {rate:.5}, split {m:.4}/{rnd:.4}/{u:.4}"))
}

// 6 -------------------------------------------------------------------------

/// Returns the per-configuration report.
fn gradient_report() -> Result<String, String> {
    let mut out = String::from("seed\tlayers\theads\tffn\tvocab\tchecked\tmax_rel_err\tmax_rel_err_two_point\n");
    for seed in 0..3 {
        let c = random_check_config(seed);
        let g = gradient_check(c, seed, 64, 1e-3).map_err(e)?;
        let _ = writeln!(
            out,
            "{seed}\t{}\t{}\t{}\t{}\t{}\t{:e}\t{:e}",
            c.layers, c.heads, c.ffn_dim, c.vocab_size, g.checked, g.max_rel_err, g.max_rel_err_two_point
        );
        check(g.checked == 64, || format!("config {seed}: {} parameters checked", g.checked))?;
        check(g.max_rel_err < 1e-4, || format!("config {seed}: max relative error {:e}", g.max_rel_err))?;
    }
    Ok(out)
}

fn criterion_6() -> Outcome {
    let report = gradient_report()?;
    let worst = report
        .lines()
        .skip(1)
        .map(|l| l.split('\t').nth(6).unwrap().parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    Ok(format!("3 configs x 64 parameters, max relative error {worst:.2e}"))
}

// 7 -------------------------------------------------------------------------

fn mlm_fixture() -> Result<(usize, Vec<PackedSequence>, Vec<PackedSequence>), String> {
    let lm = LanguageModel::new(&SynthConfig::pretraining(), 1);
    let corpus = lm.source(&SourceSpec::new("s", 400, 40, 0.0), Regime::Standard, 2).map_err(e)?.corpus;
    let tok = train_bpe(&corpus, 1000).map_err(e)?;
    let ids: Vec<Vec<u32>> = tokenize_corpus(&tok, &corpus).into_iter().map(|d| d.ids).collect();
    let seqs = pack_documents(&ids, 128).map_err(e)?.sequences;
    check(seqs.len() >= 1050, || format!("only {} packed sequences", seqs.len()))?;
    let val = seqs[seqs.len() - 50..].to_vec();
    let train_seqs = seqs[..1000].to_vec();
    Ok((tok.vocab_size(), train_seqs, val))
}

/// Returns the training report (JSON, full precision).
fn training_run() -> Result<String, String> {
    let (vocab, train_seqs, val) = mlm_fixture()?;
    let config = EncoderConfig::toy(vocab, 128);
    check(config.layers == 2 && config.hidden_dim == 64, || format!("toy shape {config:?}"))?;
    let enc = Encoder::<f32>::init(config, 1).map_err(e)?;
    let tc = TrainConfig { epochs: 5, peak_lr: 1e-3, batch_size: 16, seed: 1, ..TrainConfig::default() };
    let outcome = train(enc, &train_seqs, &val, &tc).map_err(e)?;
    let st = &outcome.state;
    check(!st.exploded, || String::from("training exploded"))?;
    let steps_per_epoch = st.train_loss_history.len() / tc.epochs;
    let initial = st.train_loss_history[0];
    let last = &st.train_loss_history[st.train_loss_history.len() - steps_per_epoch..];
    let final_mean = last.iter().sum::<f64>() / last.len() as f64;
    let ln_v = (vocab as f64).ln();
    check((initial - ln_v).abs() <= 0.05 * ln_v, || format!("initial loss {initial:.4}, ln V {ln_v:.4}"))?;
    check(final_mean < 0.6 * initial, || format!("final epoch loss {final_mean:.4} is {:.1}% of initial", 100.0 * final_mean / initial))?;

    let best = select_best_checkpoint(st).map_err(e)?;
    let brute = st
        .val_loss_history
        .iter()
        .fold(None::<(usize, f64)>, |acc, &(ep, l)| match acc {
            Some((_, b)) if l >= b => acc,
            _ => Some((ep, l)),
        })
        .map(|x| x.0)
        .unwrap();
    check(best == brute, || format!("selected epoch {best}, brute-force argmin {brute}"))?;
    check(outcome.checkpoints.iter().any(|c| c.epoch == best), || String::from("selected checkpoint missing"))?;

    let mut out = String::new();
    let _ = writeln!(out, "vocab\t{vocab}\ninitial\t{initial:?}\nfinal_epoch_mean\t{final_mean:?}\nbest_epoch\t{best}");
    for (ep, l) in &st.val_loss_history {
        let _ = writeln!(out, "val\t{ep}\t{l:?}");
    }
    for l in &st.train_loss_history {
        let _ = writeln!(out, "train\t{l:?}");
    }
    let checksum: f64 = outcome.checkpoints[best - 1].encoder.params.iter().map(|&p| p as f64).sum();
    let _ = writeln!(out, "best_param_sum\t{checksum:?}");
    Ok(out)
}

fn criterion_7() -> Outcome {
    let report = training_run()?;
    let get = |k: &str| report.lines().find_map(|l| l.strip_prefix(k)).unwrap().trim().to_string();
    let (i, f): (f64, f64) = (get("initial\t").parse().unwrap(), get("final_epoch_mean\t").parse().unwrap());
    Ok(format!("loss {i:.3} -> {f:.3} ({:.1}% of initial), best epoch {}", 100.0 * f / i, get("best_epoch\t")))
}

// 8 -------------------------------------------------------------------------

fn criterion_8() -> Outcome {
    let lm = LanguageModel::new(&SynthConfig::pretraining(), 8);
    let standard = lm.source(&SourceSpec::new("standard", 60, 20, 0.0), Regime::Standard, 1).map_err(e)?.corpus;
    let diverse = lm.source(&SourceSpec::new("diverse", 60, 20, 0.7), Regime::Diverse, 2).map_err(e)?.corpus;
    let both = Corpus::new(
        "both",
        Regime::Standard,
        standard.documents.iter().chain(&diverse.documents).cloned().collect(),
    )
    .map_err(e)?;
    let tok = train_bpe(&both, 500).map_err(e)?;
    let pack = |c: &Corpus| -> Result<Vec<PackedSequence>, String> {
        let ids: Vec<Vec<u32>> = tokenize_corpus(&tok, c).into_iter().map(|d| d.ids).collect();
        pack_documents(&ids, 64).map(|p| p.sequences).map_err(e)
    };
    let data = [pack(&standard)?, pack(&diverse)?, pack(&both)?];
    let regimes: Vec<(String, &[PackedSequence])> =
        REGIMES.iter().map(|r| r.to_string()).zip(data.iter().map(Vec::as_slice)).collect();
    let grid = [1e3, 1e-3, 1e-9];
    let report = lr_stability_probe(&EncoderConfig::toy(tok.vocab_size(), 64), &regimes, &grid, &ProbeConfig {
        seed: 1,
        ..ProbeConfig::default()
    })
    .map_err(e)?;
    for r in REGIMES {
        check(report.outcome(r, 1e-9) == Some(ProbeOutcome::Stable), || format!("{r}: 1e-9 not stable"))?;
        check(report.outcome(r, 1e3) == Some(ProbeOutcome::Exploded), || format!("{r}: 1e3 not exploded"))?;
        let max = report.max_stable_lr.iter().find(|(n, _)| n == r).and_then(|x| x.1);
        check(max.is_some(), || format!("{r}: no max stable lr"))?;
    }
    check(probe_tsv(&report).contains("max_stable_lr"), || String::from("report lacks max_stable_lr"))?;
    let anchors = [(SizeClass::Medium, 8e-4), (SizeClass::Base, 4e-4), (SizeClass::Large, 1e-4)];
    for (size, lr) in anchors {
        check(size.reference_lr() == lr, || format!("{size:?} reference lr {}", size.reference_lr()))?;
        let cfg: lingdiv::config::PretrainConfig =
            toml::from_str(&format!("size_class = \"{}\"", size.as_str())).map_err(e)?;
        check(cfg.peak_lr() == lr, || format!("{size:?} config default lr {}", cfg.peak_lr()))?;
    }
    let maxes: Vec<String> = report.max_stable_lr.iter().map(|(n, v)| format!("{n}={:e}", v.unwrap())).collect();
    Ok(format!("max stable {}; size-class defaults 8e-4/4e-4/1e-4", maxes.join(" ")))
}

// 9 -------------------------------------------------------------------------

fn criterion_9() -> Outcome {
    let lm = LanguageModel::new(&SynthConfig::default(), 1);
    let train_set = separable_task(&lm, 2000, 1);
    let test_set = separable_task(&lm, 200, 2);
    let docs: Vec<Document> = train_set
        .iter()
        .enumerate()
        .map(|(i, ex)| match &ex.input {
            TaskInput::Text { text, .. } => Ok(Document::new(format!("t{i}"), "task", text.clone())),
            _ => Err(String::from("separable task is not a text task")),
        })
        .collect::<Result<_, _>>()?;
    let tok = train_bpe(&Corpus::new("task", Regime::Standard, docs).map_err(e)?, 500).map_err(e)?;
    let enc = Encoder::<f32>::init(EncoderConfig::toy(tok.vocab_size(), 64), 1).map_err(e)?;
    let mut scores = Vec::new();
    for seed in 1..=3 {
        let cfg = FinetuneConfig { lr: 1e-3, seed, ..FinetuneConfig::default() };
        let model = finetune(&enc, &tok, TaskKind::SequenceClassification, &train_set, &cfg).map_err(e)?;
        scores.push(evaluate(&model, &tok, &test_set, Metric::Accuracy, "O").map_err(e)?.score);
    }
    let (mean, std) = mean_std(&scores);
    check(mean >= 95.0 && std <= 2.0, || format!("accuracies {scores:?}: mean {mean:.2}, std {std:.2}"))?;

    let preds: Vec<DialectPrediction> = read_jsonl(&fixtures_dir().join("tables/dialect_predictions.jsonl")).map_err(e)?;
    let table = dialect_breakdown(&preds).map_err(e)?;
    for (model, _, published) in PUBLISHED_DIALECT_COUNTS {
        for (d, want) in [Dialect::Central, Dialect::Western, Dialect::Navarrese].into_iter().zip(published) {
            let got = table.get(model, d).ok_or_else(|| format!("{model}/{} missing", d.as_str()))?;
            check((got - want).abs() <= 0.005, || format!("{model}/{}: {got:.4} vs published {want}", d.as_str()))?;
        }
    }
    Ok(format!(
        "accuracies {:.1}/{:.1}/{:.1} (mean {mean:.2}, std {std:.2}); dialect table matches, combined-large central {:.2}",
        scores[0],
        scores[1],
        scores[2],
        table.get("combined-large", Dialect::Central).unwrap()
    ))
}

// 10 ------------------------------------------------------------------------

fn criterion_10() -> Outcome {
    let reruns: [(&str, fn() -> Result<String, String>); 4] = [
        ("diversity", diversity_oracle),
        ("fertility", fertility_dominance),
        ("gradients", gradient_report),
        ("training", training_run),
    ];
    let mut sizes = Vec::new();
    for (name, f) in reruns {
        let (a, b) = (f()?, f()?);
        check(a.as_bytes() == b.as_bytes(), || format!("{name} report differs between runs"))?;
        sizes.push(format!("{name} {}B", a.len()));
    }
    Ok(format!("byte-identical reruns: {}", sizes.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 10] = [
        ("1 diversity oracle", criterion_1, Duration::from_secs(60)),
        ("2 benchmark aggregation", criterion_2, Duration::from_secs(5)),
        ("3 fertility dominance", criterion_3, Duration::from_secs(300)),
        ("4 packing invariants", criterion_4, Duration::from_secs(60)),
        ("5 masking statistics", criterion_5, Duration::from_secs(30)),
        ("6 gradient check", criterion_6, Duration::from_secs(300)),
        ("7 training sanity", criterion_7, Duration::from_secs(600)),
        ("8 lr stability probe", criterion_8, Duration::from_secs(600)),
        ("9 fine-tune smoke", criterion_9, Duration::from_secs(600)),
        ("10 determinism", criterion_10, Duration::from_secs(1800)),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f, budget) in criteria {
        if !filter.is_empty() && !filter.iter().any(|x| name.split(' ').next() == Some(x.as_str())) {
            continue;
        }
        let t = Instant::now();
        let result = f();
        let took = t.elapsed();
        let result = match result {
            Ok(msg) if took > budget => Err(format!("{msg}; took {took:.1?}, budget {budget:?}")),
            other => other,
        };
        match result {
            Ok(msg) => println!("PASS  criterion {name} ({:.1}s): {msg}", took.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("FAIL  criterion {name} ({:.1}s): {msg}", took.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
