//! Fine-tuning and evaluation harness: task specs and data, linear task
//! heads on top of the encoder, metrics, multi-seed aggregation and the
//! per-dialect breakdown.

mod finetune;
mod metrics;
mod report;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use finetune::{evaluate, finetune, predict, Evaluation, FinetuneConfig, FinetuneLogEntry, TaskModel};
pub use metrics::{accuracy, micro_f1};
pub use report::{
    aggregate, dialect_breakdown, BenchmarkReport, Dialect, DialectPrediction, DialectTable, EvalRecord, ModelSummary,
    TaskSummary,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    SequenceClassification,
    TokenLabeling,
    PairClassification,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Accuracy,
    MicroF1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiversityBlock {
    Standard,
    Diverse,
}

impl DiversityBlock {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Standard => "standard",
            Self::Diverse => "diverse",
        }
    }
}

pub const DEFAULT_NULL_LABEL: &str = "O";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: String,
    pub kind: TaskKind,
    pub metric: Metric,
    pub diversity_block: DiversityBlock,
    pub train_path: String,
    #[serde(default)]
    pub dev_path: Option<String>,
    pub test_path: String,
    /// Label ignored by micro-F1 (token tasks).
    #[serde(default = "default_null_label")]
    pub null_label: String,
}

fn default_null_label() -> String {
    String::from(DEFAULT_NULL_LABEL)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskInput {
    Text { text: String, label: String },
    Pair { text: String, text_pair: String, label: String },
    Tokens { tokens: Vec<String>, labels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskExample {
    pub input: TaskInput,
    pub dialect: Option<String>,
}

impl TaskExample {
    pub fn text(text: impl Into<String>, label: impl Into<String>) -> Self {
        Self { input: TaskInput::Text { text: text.into(), label: label.into() }, dialect: None }
    }

    pub fn pair(text: impl Into<String>, text_pair: impl Into<String>, label: impl Into<String>) -> Self {
        Self { input: TaskInput::Pair { text: text.into(), text_pair: text_pair.into(), label: label.into() }, dialect: None }
    }

    pub fn tokens(tokens: Vec<String>, labels: Vec<String>) -> Self {
        Self { input: TaskInput::Tokens { tokens, labels }, dialect: None }
    }

    pub fn with_dialect(mut self, dialect: impl Into<String>) -> Self {
        self.dialect = Some(dialect.into());
        self
    }

    pub fn gold_labels(&self) -> Vec<&str> {
        match &self.input {
            TaskInput::Text { label, .. } | TaskInput::Pair { label, .. } => alloc::vec![label.as_str()],
            TaskInput::Tokens { labels, .. } => labels.iter().map(String::as_str).collect(),
        }
    }

    fn kind(&self) -> TaskKind {
        match self.input {
            TaskInput::Text { .. } => TaskKind::SequenceClassification,
            TaskInput::Pair { .. } => TaskKind::PairClassification,
            TaskInput::Tokens { .. } => TaskKind::TokenLabeling,
        }
    }
}

/// One line of a task file: `text`/`text_pair`/`tokens`, `label`/`labels`,
/// optional `dialect`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RawExample {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_pair: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dialect: Option<String>,
}

impl RawExample {
    pub fn into_example(self, kind: TaskKind) -> Result<TaskExample> {
        let missing = |what: &str| Error::TaskSpec(format!("{kind:?} example is missing `{what}`"));
        let input = match kind {
            TaskKind::SequenceClassification => TaskInput::Text {
                text: self.text.ok_or_else(|| missing("text"))?,
                label: self.label.ok_or_else(|| missing("label"))?,
            },
            TaskKind::PairClassification => TaskInput::Pair {
                text: self.text.ok_or_else(|| missing("text"))?,
                text_pair: self.text_pair.ok_or_else(|| missing("text_pair"))?,
                label: self.label.ok_or_else(|| missing("label"))?,
            },
            TaskKind::TokenLabeling => {
                let tokens = self.tokens.ok_or_else(|| missing("tokens"))?;
                let labels = self.labels.ok_or_else(|| missing("labels"))?;
                if tokens.len() != labels.len() {
                    return Err(Error::TaskSpec(format!(
                        "{} tokens but {} labels",
                        tokens.len(),
                        labels.len()
                    )));
                }
                TaskInput::Tokens { tokens, labels }
            }
        };
        Ok(TaskExample { input, dialect: self.dialect })
    }

    pub fn from_example(example: &TaskExample) -> Self {
        let mut raw = Self { dialect: example.dialect.clone(), ..Self::default() };
        match &example.input {
            TaskInput::Text { text, label } => {
                raw.text = Some(text.clone());
                raw.label = Some(label.clone());
            }
            TaskInput::Pair { text, text_pair, label } => {
                raw.text = Some(text.clone());
                raw.text_pair = Some(text_pair.clone());
                raw.label = Some(label.clone());
            }
            TaskInput::Tokens { tokens, labels } => {
                raw.tokens = Some(tokens.clone());
                raw.labels = Some(labels.clone());
            }
        }
        raw
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn raw_conversion_checks_fields() {
        let raw = RawExample { text: Some("a".into()), label: Some("x".into()), ..RawExample::default() };
        let ex = raw.clone().into_example(TaskKind::SequenceClassification).unwrap();
        assert_eq!(RawExample::from_example(&ex), raw);
        assert!(raw.into_example(TaskKind::PairClassification).is_err());
        let ragged = RawExample { tokens: Some(vec!["a".into()]), labels: Some(vec![]), ..RawExample::default() };
        assert!(matches!(ragged.into_example(TaskKind::TokenLabeling), Err(Error::TaskSpec(_))));
    }
}
