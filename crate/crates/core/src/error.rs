use thiserror::Error;

use crate::graph::NodeId;
use crate::value::Value;

/// Errors raised by the graph-program model.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),

    #[error("value {value} is outside the domain of variable `{var}` of node {node}")]
    OutOfDomain { node: NodeId, var: String, value: Value },

    #[error("state space has {size} states, cap is {cap}")]
    Capacity { size: u128, cap: u64 },

    #[error("view belongs to node {view} but the action belongs to node {action}")]
    ViewMismatch { view: NodeId, action: NodeId },

    #[error("invalid topology: {0}")]
    Topology(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;
