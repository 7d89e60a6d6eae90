use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("{op} reached {acks} of {needed} replicas after {attempts} attempt(s)")]
    QuorumFailure { op: &'static str, acks: usize, needed: usize, attempts: u32 },

    #[error("invalid quorum configuration: {0}")]
    InvalidConfig(String),

    #[error("cannot resolve an empty version set")]
    NoVersions,
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;
