//! Graph programs of guarded commands, their transition semantics, and the
//! stabilizing protocols built on them.

pub mod error;
pub mod graph;
pub mod program;
pub mod protocols;
pub mod space;
pub mod state;
pub mod value;

pub use error::{ModelError, Result};
pub use graph::{closed_neighborhood, GraphTopology, NodeId};
pub use program::{ActionDef, Assignment, ProgramSpec, Rule, Transition};
pub use protocols::{InvariantPredicate, LocalInvariant, ProtocolInstance, ProtocolKind};
pub use space::{StateSpace, DEFAULT_STATE_CAP};
pub use state::{GlobalState, LocalView, VarDecl, VarId};
pub use value::{Domain, Value};
