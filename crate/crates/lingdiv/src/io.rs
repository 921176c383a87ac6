//! On-disk formats: JSON-lines corpora and task files, JSON classifier and
//! tokenizer files, the packed-sequence binary and encoder checkpoints.

use std::fs;
use std::path::Path;

use lingdiv_core::corpus::{Corpus, Document, Regime, VarietyHint};
use lingdiv_core::diversity::{VarietyClassifier, CLASSIFIER_FORMAT_VERSION};
use lingdiv_core::encoder::{Encoder, EncoderConfig, SizeClass};
use lingdiv_core::eval::{RawExample, TaskExample, TaskKind};
use lingdiv_core::packing::PackedSequence;
use lingdiv_core::tokenizer::{SubwordTokenizer, TokenId, TokenizerFile, TOKENIZER_FORMAT_VERSION};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn read_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Writes through a temporary sibling and a rename so readers never see a
/// half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    fs::write(tmp, bytes).map_err(|e| Error::io(tmp, e))?;
    fs::rename(tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_string(path)?).map_err(|e| Error::format(path, e.to_string()))
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json_string(value).as_bytes())
}

/// Strict JSON-lines reader: blank lines are skipped, any other bad line is
/// an error naming its 1-based line number.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    read_string(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::format(path, format!("line {}: {e}", i + 1))))
        .collect()
}

pub fn jsonl_string<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("serializable"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    write_atomic(path, jsonl_string(items).as_bytes())
}

#[derive(Deserialize)]
struct CorpusLine {
    #[serde(default)]
    id: Option<String>,
    #[serde(default)]
    source: Option<String>,
    text: String,
    #[serde(default)]
    author: Option<String>,
    #[serde(default)]
    timestamp: Option<i64>,
    #[serde(default)]
    variety_hint: VarietyHint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct LoadReport {
    /// Non-blank lines read.
    pub lines: usize,
    pub malformed: usize,
    pub first_malformed_line: Option<usize>,
}

/// Parses a JSON-lines corpus. Lines that are not an object with a
/// non-blank string `text` are counted as malformed. More than 10% malformed
/// lines is an error, except that a single bad line is always tolerated. Missing ids become `<name>-<line>`, missing sources the
/// corpus name.
pub fn parse_corpus(content: &str, name: &str, regime: Regime, path: &Path) -> Result<(Corpus, LoadReport)> {
    let mut report = LoadReport::default();
    let mut documents = Vec::new();
    for (i, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        report.lines += 1;
        let parsed = serde_json::from_str::<CorpusLine>(line).ok().filter(|r| !r.text.trim().is_empty());
        let Some(rec) = parsed else {
            report.malformed += 1;
            report.first_malformed_line.get_or_insert(i + 1);
            continue;
        };
        documents.push(Document {
            id: rec.id.unwrap_or_else(|| format!("{name}-{}", i + 1)),
            source: rec.source.unwrap_or_else(|| name.to_string()),
            text: rec.text,
            author: rec.author,
            timestamp: rec.timestamp,
            variety_hint: rec.variety_hint,
        });
    }
    if report.malformed > 1 && report.malformed * 10 > report.lines {
        return Err(Error::format(
            path,
            format!(
                "{} of {} lines are malformed (first at line {})",
                report.malformed,
                report.lines,
                report.first_malformed_line.unwrap_or(0)
            ),
        ));
    }
    Ok((Corpus::new(name, regime, documents)?, report))
}

pub fn load_corpus(path: &Path, name: &str, regime: Regime) -> Result<(Corpus, LoadReport)> {
    parse_corpus(&read_string(path)?, name, regime, path)
}

/// Corpus name used when none is given: the file stem.
pub fn corpus_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| String::from("corpus"))
}

pub fn write_corpus(path: &Path, corpus: &Corpus) -> Result<()> {
    write_jsonl(path, &corpus.documents)
}

pub fn read_classifier(path: &Path) -> Result<VarietyClassifier> {
    let c: VarietyClassifier = read_json(path)?;
    if c.format_version != CLASSIFIER_FORMAT_VERSION {
        return Err(Error::format(path, format!("unsupported classifier format version {}", c.format_version)));
    }
    Ok(c)
}

pub fn read_tokenizer(path: &Path) -> Result<SubwordTokenizer> {
    let file: TokenizerFile = read_json(path)?;
    if file.format_version != TOKENIZER_FORMAT_VERSION {
        return Err(Error::format(path, format!("unsupported tokenizer format version {}", file.format_version)));
    }
    SubwordTokenizer::from_file(&file).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_tokenizer(path: &Path, tokenizer: &SubwordTokenizer) -> Result<()> {
    write_json(path, &tokenizer.to_file())
}

/// One tokenized document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedDoc {
    pub id: String,
    pub ids: Vec<TokenId>,
}

pub fn tokenize_corpus(tokenizer: &SubwordTokenizer, corpus: &Corpus) -> Vec<TokenizedDoc> {
    corpus.documents.iter().map(|d| TokenizedDoc { id: d.id.clone(), ids: tokenizer.encode(&d.text) }).collect()
}

pub const PACKED_MAGIC: [u8; 4] = *b"LDPK";
pub const PACKED_VERSION: u32 = 1;
const PACKED_HEADER: usize = 16;

/// 16-byte header (magic, version, L, count as little-endian u32) followed by
/// `count` records of `L` little-endian u32 ids.
pub fn encode_packed(seq_len: usize, seqs: &[PackedSequence]) -> Result<Vec<u8>> {
    if let Some(bad) = seqs.iter().position(|s| s.len() != seq_len) {
        return Err(Error::Config(format!("sequence {bad} has length {} instead of {seq_len}", seqs[bad].len())));
    }
    let mut out = Vec::with_capacity(PACKED_HEADER + 4 * seq_len * seqs.len());
    out.extend_from_slice(&PACKED_MAGIC);
    for v in [PACKED_VERSION, seq_len as u32, seqs.len() as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for s in seqs {
        for &t in &s.token_ids {
            out.extend_from_slice(&t.to_le_bytes());
        }
    }
    Ok(out)
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

pub fn decode_packed(bytes: &[u8], path: &Path) -> Result<(usize, Vec<PackedSequence>)> {
    if bytes.len() < PACKED_HEADER || bytes[..4] != PACKED_MAGIC {
        return Err(Error::format(path, "not a packed-sequence file"));
    }
    let version = u32_at(bytes, 4);
    if version != PACKED_VERSION {
        return Err(Error::format(path, format!("unsupported packed format version {version}")));
    }
    let (seq_len, count) = (u32_at(bytes, 8) as usize, u32_at(bytes, 12) as usize);
    if bytes.len() != PACKED_HEADER + 4 * seq_len * count {
        return Err(Error::format(path, format!("expected {count} records of {seq_len} ids, file size disagrees")));
    }
    let seqs = bytes[PACKED_HEADER..]
        .chunks_exact(4 * seq_len.max(1))
        .take(count)
        .enumerate()
        .map(|(i, rec)| {
            let ids = rec.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
            PackedSequence::from_ids(ids).map_err(|e| Error::format(path, format!("record {i}: {e}")))
        })
        .collect::<Result<_>>()?;
    Ok((seq_len, seqs))
}

pub fn write_packed(path: &Path, seq_len: usize, seqs: &[PackedSequence]) -> Result<()> {
    write_atomic(path, &encode_packed(seq_len, seqs)?)
}

pub fn read_packed(path: &Path) -> Result<(usize, Vec<PackedSequence>)> {
    decode_packed(&read_bytes(path)?, path)
}

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"LDCK";
pub const CHECKPOINT_VERSION: u32 = 1;

/// An encoder plus where in training it was taken.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointFile {
    pub encoder: Encoder<f32>,
    pub epoch: usize,
    pub step: usize,
    pub val_loss: f64,
}

fn size_code(s: SizeClass) -> u32 {
    match s {
        SizeClass::Toy => 0,
        SizeClass::Medium => 1,
        SizeClass::Base => 2,
        SizeClass::Large => 3,
    }
}

/// Layout: magic, version, size class, layers, hidden, heads, ffn, vocab,
/// positions, epoch (u32 each), step (u64), validation loss (f64), parameter
/// count (u64), then the f32 parameters, all little-endian.
pub fn encode_checkpoint(ckpt: &CheckpointFile) -> Vec<u8> {
    let c = &ckpt.encoder.config;
    let mut out = Vec::with_capacity(64 + 4 * ckpt.encoder.params.len());
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    let header = [
        CHECKPOINT_VERSION,
        size_code(c.size_class),
        c.layers as u32,
        c.hidden_dim as u32,
        c.heads as u32,
        c.ffn_dim as u32,
        c.vocab_size as u32,
        c.max_positions as u32,
        ckpt.epoch as u32,
    ];
    for v in header {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(ckpt.step as u64).to_le_bytes());
    out.extend_from_slice(&ckpt.val_loss.to_le_bytes());
    out.extend_from_slice(&(ckpt.encoder.params.len() as u64).to_le_bytes());
    for p in &ckpt.encoder.params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn decode_checkpoint(bytes: &[u8], path: &Path) -> Result<CheckpointFile> {
    const HEAD: usize = 4 + 9 * 4 + 8 + 8 + 8;
    if bytes.len() < HEAD || bytes[..4] != CHECKPOINT_MAGIC {
        return Err(Error::format(path, "not a checkpoint file"));
    }
    let h: Vec<u32> = (0..9).map(|i| u32_at(bytes, 4 + 4 * i)).collect();
    if h[0] != CHECKPOINT_VERSION {
        return Err(Error::format(path, format!("unsupported checkpoint version {}", h[0])));
    }
    let size_class = match h[1] {
        0 => SizeClass::Toy,
        1 => SizeClass::Medium,
        2 => SizeClass::Base,
        3 => SizeClass::Large,
        other => return Err(Error::format(path, format!("unknown size class code {other}"))),
    };
    let u64_at = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"));
    let step = u64_at(40) as usize;
    let val_loss = f64::from_bits(u64_at(48));
    let n = u64_at(56) as usize;
    if bytes.len() != HEAD + 4 * n {
        return Err(Error::format(path, format!("header announces {n} parameters, file size disagrees")));
    }
    let params = bytes[HEAD..].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
    let config = EncoderConfig {
        layers: h[2] as usize,
        hidden_dim: h[3] as usize,
        heads: h[4] as usize,
        ffn_dim: h[5] as usize,
        vocab_size: h[6] as usize,
        max_positions: h[7] as usize,
        size_class,
    };
    let encoder = Encoder::from_params(config, params).map_err(|e| Error::format(path, e.to_string()))?;
    Ok(CheckpointFile { encoder, epoch: h[8] as usize, step, val_loss })
}

pub fn write_checkpoint(path: &Path, ckpt: &CheckpointFile) -> Result<()> {
    write_atomic(path, &encode_checkpoint(ckpt))
}

pub fn read_checkpoint(path: &Path) -> Result<CheckpointFile> {
    decode_checkpoint(&read_bytes(path)?, path)
}

/// One line of the pretraining log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainLogEntry {
    pub step: usize,
    pub lr: f64,
    pub loss: f64,
    pub grad_norm: f64,
}

/// Task file lines, converted for `kind`; a bad line is an error naming it.
pub fn load_task_examples(path: &Path, kind: TaskKind) -> Result<Vec<TaskExample>> {
    let raw: Vec<RawExample> = read_jsonl(path)?;
    raw.into_iter()
        .enumerate()
        .map(|(i, r)| r.into_example(kind).map_err(|e| Error::format(path, format!("example {}: {e}", i + 1))))
        .collect()
}

pub fn write_task_examples(path: &Path, examples: &[TaskExample]) -> Result<()> {
    let raw: Vec<RawExample> = examples.iter().map(RawExample::from_example).collect();
    write_jsonl(path, &raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lingdiv_core::packing::pack_documents;

    fn parse(content: &str) -> Result<(Corpus, LoadReport)> {
        parse_corpus(content, "c", Regime::Standard, Path::new("c.jsonl"))
    }

    #[test]
    fn corpus_lines_in_file_order() {
        let (c, r) = parse("{\"id\":\"a\",\"text\":\"x y\"}\n{\"text\":\"z\",\"source\":\"s\"}\n{\"id\":\"b\",\"text\":\"w\"}\n").unwrap();
        assert_eq!(c.documents.iter().map(|d| d.id.as_str()).collect::<Vec<_>>(), ["a", "c-2", "b"]);
        assert_eq!(c.documents[0].source, "c");
        assert_eq!(c.documents[1].source, "s");
        assert_eq!(r.malformed, 0);
    }

    #[test]
    fn malformed_lines_are_counted() {
        let mut lines = vec![String::from("{\"id\":\"0\",\"text\":\"ok\"}"), String::from("{\"id\":\"x\"}")];
        lines.extend((1..10).map(|i| format!("{{\"id\":\"{i}\",\"text\":\"ok\"}}")));
        let (c, r) = parse(&lines.join("\n")).unwrap();
        assert_eq!((c.len(), r.malformed, r.first_malformed_line), (10, 1, Some(2)));

        let (c, r) = parse("{\"text\":\"a\"}\n{\"id\":\"q\"}\n{\"text\":\"b\"}\n").unwrap();
        assert_eq!((c.len(), r.malformed), (2, 1));
        match parse("{\"text\":\"a\"}\n{\"id\":\"q\"}\nnot json\n") {
            Err(Error::Format { msg, .. }) => assert!(msg.contains("line 2"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_file_is_an_empty_corpus() {
        let (c, r) = parse("").unwrap();
        assert!(c.is_empty());
        assert_eq!(r, LoadReport::default());
    }

    #[test]
    fn corpus_round_trip() {
        let docs = vec![
            Document::new("a", "s", "kaixo mundua").with_author("u").with_timestamp(5),
            Document::new("b", "t", "agur").with_hint(VarietyHint::Diverse),
        ];
        let c = Corpus::new("c", Regime::Standard, docs).unwrap();
        let (back, _) = parse(&jsonl_string(&c.documents)).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn packed_round_trip_and_header() {
        let frags: Vec<Vec<u32>> = (0..7).map(|i| (5..5 + 3 * i + 1).collect()).collect();
        let seqs = pack_documents(&frags, 16).unwrap().sequences;
        let bytes = encode_packed(16, &seqs).unwrap();
        assert_eq!(&bytes[..4], b"LDPK");
        assert_eq!(u32_at(&bytes, 8), 16);
        assert_eq!(u32_at(&bytes, 12) as usize, seqs.len());
        assert_eq!(bytes.len(), 16 + 4 * 16 * seqs.len());
        let (l, back) = decode_packed(&bytes, Path::new("p")).unwrap();
        assert_eq!((l, back), (16, seqs));
        assert!(decode_packed(&bytes[..bytes.len() - 1], Path::new("p")).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let enc = Encoder::init(EncoderConfig::toy(40, 12), 2).unwrap();
        let ckpt = CheckpointFile { encoder: enc, epoch: 3, step: 77, val_loss: 1.25 };
        let bytes = encode_checkpoint(&ckpt);
        assert_eq!(decode_checkpoint(&bytes, Path::new("k")).unwrap(), ckpt);
        assert!(decode_checkpoint(&bytes[..bytes.len() - 4], Path::new("k")).is_err());
    }
}
