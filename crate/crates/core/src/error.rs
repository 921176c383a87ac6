use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("training failed: {0}")]
    Training(String),
    #[error("invalid task spec: {0}")]
    TaskSpec(String),
    #[error("evaluation failed: {0}")]
    Evaluation(String),
    #[error("aggregation failed: {0}")]
    Aggregation(String),
    #[error("empty input: {0}")]
    Empty(String),
}
