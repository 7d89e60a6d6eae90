use kvstab_core::ModelError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalyzerError {
    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("k must be at least 2, got {0}")]
    InvalidK(u32),

    #[error("recovery is unbounded: {0}")]
    Unbounded(String),
}

pub type Result<T, E = AnalyzerError> = std::result::Result<T, E>;
