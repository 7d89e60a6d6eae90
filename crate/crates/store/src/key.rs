use std::fmt;

use kvstab_core::{NodeId, VarId};
use serde::{Deserialize, Serialize};

/// A store key: one per program variable, plus free-form auxiliary keys.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Key {
    Var(VarId),
    Aux(String),
}

impl Key {
    pub fn var(node: NodeId, slot: usize) -> Self {
        Key::Var(VarId::new(node, slot))
    }

    pub fn as_var(&self) -> Option<VarId> {
        match self {
            Key::Var(v) => Some(*v),
            Key::Aux(_) => None,
        }
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Key::Var(v) => write!(f, "var/{}/{}", v.node, v.slot),
            Key::Aux(name) => write!(f, "aux/{name}"),
        }
    }
}
