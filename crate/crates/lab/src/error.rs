use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("config line {line}: {reason}")]
    ConfigSyntax { line: usize, reason: String },
    #[error("config key `{key}`: {reason}")]
    ConfigValue { key: String, reason: String },
    #[error("unsupported config version {0} (this build reads version {1})")]
    ConfigVersion(u32, u32),
    #[error("missing required setting `{0}`")]
    Missing(&'static str),
    #[error(transparent)]
    Model(#[from] lrvoter_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

impl LabError {
    /// Process exit status for this error: 3 for cutoff certification, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Model(lrvoter_core::Error::Uncertified { .. } | lrvoter_core::Error::CutoffFailure { .. }) => 3,
            _ => 1,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
