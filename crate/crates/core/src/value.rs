use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::NodeId;

/// A variable's value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "t", content = "v", rename_all = "lowercase")]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Node(NodeId),
}

impl Value {
    pub fn as_bool(self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(b),
            _ => None,
        }
    }

    pub fn as_int(self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(i),
            _ => None,
        }
    }

    /// `Some(None)` for null, `Some(Some(id))` for a node reference.
    pub fn as_node_ref(self) -> Option<Option<NodeId>> {
        match self {
            Value::Null => Some(None),
            Value::Node(n) => Some(Some(n)),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("null"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Node(n) => write!(f, "#{n}"),
        }
    }
}

/// Finite domain of a variable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Bool,
    /// Integers in `[lo, hi)`.
    IntRange {
        lo: i64,
        hi: i64,
    },
    /// `{null} ∪ {0, .., nodes - 1}`.
    NodeOrNull {
        nodes: u32,
    },
}

impl Domain {
    pub fn contains(&self, v: &Value) -> bool {
        match (self, v) {
            (Domain::Bool, Value::Bool(_)) => true,
            (Domain::IntRange { lo, hi }, Value::Int(i)) => lo <= i && i < hi,
            (Domain::NodeOrNull { .. }, Value::Null) => true,
            (Domain::NodeOrNull { nodes }, Value::Node(n)) => n.0 < *nodes,
            _ => false,
        }
    }

    pub fn size(&self) -> u64 {
        match self {
            Domain::Bool => 2,
            Domain::IntRange { lo, hi } => (hi - lo).max(0) as u64,
            Domain::NodeOrNull { nodes } => u64::from(*nodes) + 1,
        }
    }

    /// Enumerates the domain in a fixed order; `value_at(i)` agrees with it.
    pub fn values(&self) -> Vec<Value> {
        (0..self.size()).map(|i| self.value_at(i)).collect()
    }

    pub fn value_at(&self, i: u64) -> Value {
        match self {
            Domain::Bool => Value::Bool(i == 1),
            Domain::IntRange { lo, .. } => Value::Int(lo + i as i64),
            Domain::NodeOrNull { .. } => {
                if i == 0 {
                    Value::Null
                } else {
                    Value::Node(NodeId((i - 1) as u32))
                }
            }
        }
    }

    /// Inverse of [`Domain::value_at`]; `None` when `v` is outside the domain.
    pub fn index_of(&self, v: &Value) -> Option<u64> {
        if !self.contains(v) {
            return None;
        }
        Some(match (self, v) {
            (Domain::Bool, Value::Bool(b)) => u64::from(*b),
            (Domain::IntRange { lo, .. }, Value::Int(i)) => (i - lo) as u64,
            (Domain::NodeOrNull { .. }, Value::Null) => 0,
            (Domain::NodeOrNull { .. }, Value::Node(n)) => u64::from(n.0) + 1,
            _ => unreachable!(),
        })
    }
}
