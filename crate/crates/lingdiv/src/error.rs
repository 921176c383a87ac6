use std::path::{Path, PathBuf};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] lingdiv_core::Error),
    #[error("stage `{stage}` failed: {source}")]
    Stage { stage: String, source: Box<Error> },
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    pub fn format(path: &Path, msg: impl Into<String>) -> Self {
        Self::Format { path: path.to_path_buf(), msg: msg.into() }
    }

    /// 1 for problems with the inputs, 2 for failures while computing.
    pub fn exit_code(&self) -> i32 {
        use lingdiv_core::Error as E;
        match self {
            Self::Io { .. } | Self::Format { .. } | Self::Config(_) => 1,
            Self::Core(E::Argument(_) | E::Config(_) | E::Precondition(_) | E::TaskSpec(_)) => 1,
            Self::Core(_) | Self::Stage { .. } => 2,
        }
    }
}
