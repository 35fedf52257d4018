use std::path::PathBuf;

use qcontrol_core::scaling::CampaignFailure;

/// Errors surfaced by the harness, grouped by the exit code they map to.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("invalid config: {0}")]
    Invalid(String),

    #[error("could not read {}: {source}", path.display())]
    Read { path: PathBuf, source: std::io::Error },

    #[error("io error on {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("csv error on {}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },

    #[error("malformed artifact {}: {message}", path.display())]
    Artifact { path: PathBuf, message: String },

    #[error("campaign aborted: {0}")]
    Campaign(#[from] qcontrol_core::Error),

    #[error("campaign aborted after {accepted} accepted points: {error}")]
    Aborted { error: qcontrol_core::Error, accepted: usize },
}

impl HarnessError {
    /// 1 for anything wrong with the input, 2 when the experiment itself failed.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config { .. } | HarnessError::Invalid(_) | HarnessError::Read { .. } => 1,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        HarnessError::Csv { path: path.into(), source }
    }

    pub(crate) fn artifact(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        HarnessError::Artifact { path: path.into(), message: message.into() }
    }
}

impl From<CampaignFailure> for HarnessError {
    fn from(f: CampaignFailure) -> Self {
        HarnessError::Aborted { error: f.error, accepted: f.partial.policies.len() }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
