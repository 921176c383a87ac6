use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use super::DiversityBlock;
use crate::error::{Error, Result};
use crate::stats::mean_std;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub model: String,
    pub task: String,
    pub seed: u64,
    /// Percentage in [0, 100].
    pub score: f64,
    pub block: DiversityBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSummary {
    pub task: String,
    pub block: DiversityBlock,
    pub mean: f64,
    /// Population standard deviation over seeds.
    pub std: f64,
    pub seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: String,
    pub tasks: Vec<TaskSummary>,
    pub avg_standard: Option<f64>,
    pub avg_diverse: Option<f64>,
    /// Unweighted mean over all tasks (not over the two block averages).
    pub avg_overall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    /// Tasks in report order: standard block first, then diverse, each in
    /// first-seen order.
    pub tasks: Vec<(String, DiversityBlock)>,
    pub models: Vec<ModelSummary>,
}

fn first_seen<'a>(items: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    items.filter(|x| seen.insert(*x)).map(String::from).collect()
}

/// Per-(model, task) mean/std over seeds and per-model block averages.
/// Averages are taken over unrounded task means.
pub fn aggregate(records: &[EvalRecord]) -> Result<BenchmarkReport> {
    if records.is_empty() {
        return Err(Error::Aggregation(format!("no evaluation records")));
    }
    let mut blocks: BTreeMap<&str, DiversityBlock> = BTreeMap::new();
    let mut cells: BTreeMap<(&str, &str), Vec<(u64, f64)>> = BTreeMap::new();
    for r in records {
        if !(0.0..=100.0).contains(&r.score) {
            return Err(Error::Aggregation(format!(
                "score {} for {}/{} seed {} is outside [0, 100]",
                r.score, r.model, r.task, r.seed
            )));
        }
        if let Some(&b) = blocks.get(r.task.as_str()) {
            if b != r.block {
                return Err(Error::Aggregation(format!("task `{}` is tagged with both blocks", r.task)));
            }
        }
        blocks.insert(&r.task, r.block);
        let cell = cells.entry((&r.model, &r.task)).or_default();
        if cell.iter().any(|(s, _)| *s == r.seed) {
            return Err(Error::Aggregation(format!("duplicate record for {}/{} seed {}", r.model, r.task, r.seed)));
        }
        cell.push((r.seed, r.score));
    }

    let counts: BTreeSet<usize> = cells.values().map(Vec::len).collect();
    if counts.len() > 1 {
        let mut by_count: BTreeMap<usize, usize> = BTreeMap::new();
        for v in cells.values() {
            *by_count.entry(v.len()).or_insert(0) += 1;
        }
        let majority = by_count.iter().max_by_key(|(c, n)| (**n, **c)).map(|(c, _)| *c).unwrap_or(0);
        let offenders: Vec<String> = cells
            .iter()
            .filter(|(_, v)| v.len() != majority)
            .map(|((m, t), v)| format!("{m}/{t} ({} seeds)", v.len()))
            .collect();
        return Err(Error::Aggregation(format!(
            "ragged seed counts, expected {majority} per model/task: {}",
            offenders.join(", ")
        )));
    }

    let task_order = first_seen(records.iter().map(|r| r.task.as_str()));
    let mut tasks: Vec<(String, DiversityBlock)> = task_order.iter().map(|t| (t.clone(), blocks[t.as_str()])).collect();
    tasks.sort_by_key(|(_, b)| *b);

    let models = first_seen(records.iter().map(|r| r.model.as_str()))
        .into_iter()
        .map(|model| {
            let summaries: Vec<TaskSummary> = tasks
                .iter()
                .filter_map(|(task, block)| {
                    let cell = cells.get(&(model.as_str(), task.as_str()))?;
                    let mut scores: Vec<f64> = cell.iter().map(|(_, s)| *s).collect();
                    scores.sort_by(f64::total_cmp);
                    let (mean, std) = mean_std(&scores);
                    Some(TaskSummary { task: task.clone(), block: *block, mean, std, seeds: scores.len() })
                })
                .collect();
            let avg = |want: Option<DiversityBlock>| {
                let xs: Vec<f64> =
                    summaries.iter().filter(|t| want.map_or(true, |b| t.block == b)).map(|t| t.mean).collect();
                (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
            };
            ModelSummary {
                avg_standard: avg(Some(DiversityBlock::Standard)),
                avg_diverse: avg(Some(DiversityBlock::Diverse)),
                avg_overall: avg(None).unwrap_or(0.0),
                tasks: summaries,
                model,
            }
        })
        .collect();
    Ok(BenchmarkReport { tasks, models })
}

impl BenchmarkReport {
    pub fn model(&self, name: &str) -> Option<&ModelSummary> {
        self.models.iter().find(|m| m.model == name)
    }

    /// Table-4-shaped TSV: one row per task (`mean±std`), then the block
    /// and overall averages; one column per model.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("block\ttask");
        for m in &self.models {
            out.push('\t');
            out.push_str(&m.model);
        }
        out.push('\n');
        for (task, block) in &self.tasks {
            let _ = write!(out, "{}\t{task}", block.as_str());
            for m in &self.models {
                match m.tasks.iter().find(|t| &t.task == task) {
                    Some(t) => {
                        let _ = write!(out, "\t{:.2}±{:.2}", t.mean, t.std);
                    }
                    None => out.push_str("\t-"),
                }
            }
            out.push('\n');
        }
        let rows: [(&str, fn(&ModelSummary) -> Option<f64>); 3] = [
            ("AVG standard", |m| m.avg_standard),
            ("AVG diverse", |m| m.avg_diverse),
            ("AVG overall", |m| Some(m.avg_overall)),
        ];
        for (name, get) in rows {
            let _ = write!(out, "avg\t{name}");
            for m in &self.models {
                match get(m) {
                    Some(v) => {
                        let _ = write!(out, "\t{v:.2}");
                    }
                    None => out.push_str("\t-"),
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dialect {
    Central,
    Western,
    Navarrese,
}

impl Dialect {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "central" => Ok(Self::Central),
            "western" => Ok(Self::Western),
            "navarrese" => Ok(Self::Navarrese),
            _ => Err(Error::Evaluation(format!("unknown dialect tag `{s}`"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Central => "central",
            Self::Western => "western",
            Self::Navarrese => "navarrese",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialectPrediction {
    pub model: String,
    pub dialect: String,
    pub gold: String,
    pub predicted: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialectTable {
    pub dialects: Vec<Dialect>,
    pub models: Vec<String>,
    /// `cells[model][dialect]`, accuracy in percent; `None` when a model has
    /// no item of that dialect.
    pub cells: Vec<Vec<Option<f64>>>,
}

impl DialectTable {
    pub fn get(&self, model: &str, dialect: Dialect) -> Option<f64> {
        let m = self.models.iter().position(|x| x == model)?;
        let d = self.dialects.iter().position(|&x| x == dialect)?;
        self.cells[m][d]
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("model");
        for d in &self.dialects {
            out.push('\t');
            out.push_str(d.as_str());
        }
        out.push('\n');
        for (m, row) in self.models.iter().zip(&self.cells) {
            out.push_str(m);
            for c in row {
                match c {
                    Some(v) => {
                        let _ = write!(out, "\t{v:.2}");
                    }
                    None => out.push_str("\t-"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Accuracy per (model, dialect). Columns are the dialects present, in
/// central, western, navarrese order.
pub fn dialect_breakdown(predictions: &[DialectPrediction]) -> Result<DialectTable> {
    if predictions.is_empty() {
        return Err(Error::Evaluation(format!("no dialect-tagged predictions")));
    }
    let mut counts: BTreeMap<(&str, Dialect), (usize, usize)> = BTreeMap::new();
    for p in predictions {
        let d = Dialect::parse(&p.dialect)?;
        let c = counts.entry((&p.model, d)).or_insert((0, 0));
        c.0 += usize::from(p.gold == p.predicted);
        c.1 += 1;
    }
    let dialects: Vec<Dialect> = counts.keys().map(|(_, d)| *d).collect::<BTreeSet<_>>().into_iter().collect();
    let models = first_seen(predictions.iter().map(|p| p.model.as_str()));
    let cells = models
        .iter()
        .map(|m| {
            dialects
                .iter()
                .map(|&d| counts.get(&(m.as_str(), d)).map(|&(ok, n)| ok as f64 * 100.0 / n as f64))
                .collect()
        })
        .collect();
    Ok(DialectTable { dialects, models, cells })
}
