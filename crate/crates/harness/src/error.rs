use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] kvstab_core::ModelError),
    #[error(transparent)]
    Store(#[from] kvstab_store::StoreError),
    #[error(transparent)]
    Engine(#[from] kvstab_engine::EngineError),
    #[error(transparent)]
    Analyzer(#[from] kvstab_analyzer::AnalyzerError),
    #[error("cannot parse config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
