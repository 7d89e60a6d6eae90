use kvstab_core::ModelError;
use kvstab_store::StoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Store(#[from] StoreError),

    #[error("invalid engine configuration: {0}")]
    InvalidConfig(String),

    #[error("writing event log: {0}")]
    Log(#[from] std::io::Error),
}

pub type Result<T, E = EngineError> = std::result::Result<T, E>;
