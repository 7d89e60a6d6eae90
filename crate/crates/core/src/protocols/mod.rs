pub mod matching;
pub mod token_ring;

use std::fmt;
use std::sync::Arc;

use crate::error::Result;
use crate::graph::{GraphTopology, NodeId};
use crate::program::ProgramSpec;
use crate::state::GlobalState;

type HoldsFn = dyn Fn(&GlobalState) -> bool + Send + Sync;
type LocalFn = dyn Fn(&GlobalState, NodeId) -> bool + Send + Sync;

/// A per-node decomposition of an invariant: the invariant holds iff
/// `check` holds at every node, and `check` at `j` reads only nodes within
/// `radius` hops of `j`. Lets runtimes maintain the invariant incrementally.
#[derive(Clone)]
pub struct LocalInvariant {
    pub radius: usize,
    check: Arc<LocalFn>,
}

impl LocalInvariant {
    pub fn new<F>(radius: usize, check: F) -> Self
    where
        F: Fn(&GlobalState, NodeId) -> bool + Send + Sync + 'static,
    {
        LocalInvariant { radius, check: Arc::new(check) }
    }

    pub fn check(&self, state: &GlobalState, j: NodeId) -> bool {
        (self.check)(state, j)
    }
}

/// A named legitimate-state predicate.
#[derive(Clone)]
pub struct InvariantPredicate {
    name: String,
    holds: Arc<HoldsFn>,
    local: Option<LocalInvariant>,
}

impl InvariantPredicate {
    pub fn new<F>(name: impl Into<String>, holds: F) -> Self
    where
        F: Fn(&GlobalState) -> bool + Send + Sync + 'static,
    {
        InvariantPredicate { name: name.into(), holds: Arc::new(holds), local: None }
    }

    pub fn with_local(mut self, local: LocalInvariant) -> Self {
        self.local = Some(local);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn holds(&self, state: &GlobalState) -> bool {
        (self.holds)(state)
    }

    pub fn local(&self) -> Option<&LocalInvariant> {
        self.local.as_ref()
    }
}

impl fmt::Debug for InvariantPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InvariantPredicate")
            .field("name", &self.name)
            .field("local", &self.local.as_ref().map(|l| l.radius))
            .finish()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProtocolKind {
    Matching,
    TokenRing { k: u32 },
}

impl ProtocolKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolKind::Matching => "matching",
            ProtocolKind::TokenRing { .. } => "token-ring",
        }
    }

    pub fn is_silent(&self) -> bool {
        matches!(self, ProtocolKind::Matching)
    }
}

/// A protocol bound to a topology, with its invariant.
#[derive(Clone, Debug)]
pub struct ProtocolInstance {
    pub kind: ProtocolKind,
    pub spec: ProgramSpec,
    pub invariant: InvariantPredicate,
}

impl ProtocolInstance {
    pub fn matching(topology: Arc<GraphTopology>) -> Self {
        let spec = matching::matching_spec(topology.clone());
        let (t1, t2) = (topology.clone(), topology);
        let invariant = InvariantPredicate::new("maximal-matching", move |s| matching::matching_invariant(&t1, s))
            .with_local(LocalInvariant::new(2, move |s, j| matching::locally_legitimate(&t2, s, j)));
        ProtocolInstance { kind: ProtocolKind::Matching, spec, invariant }
    }

    pub fn token_ring(n_nodes: usize, k: u32) -> Result<Self> {
        let spec = token_ring::token_spec(n_nodes, k)?;
        Ok(Self::token_ring_from(spec, k))
    }

    /// Wraps an arbitrary program on a token-ring topology (such as a mutant)
    /// with the token-ring invariant.
    pub fn token_ring_from(spec: ProgramSpec, k: u32) -> Self {
        let invariant = InvariantPredicate::new("token-ring", move |s| token_ring::token_invariant(s, k));
        ProtocolInstance { kind: ProtocolKind::TokenRing { k }, spec, invariant }
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn topology(&self) -> &GraphTopology {
        self.spec.topology()
    }

    /// Whether node `j` looks settled on `state`: no enabled action, and for
    /// matching also Matched or Dead.
    pub fn node_settled(&self, state: &GlobalState, j: NodeId) -> bool {
        let view = self.spec.view(state, j);
        if self.spec.first_enabled(&view).is_some() {
            return false;
        }
        match self.kind {
            ProtocolKind::Matching => {
                matching::node_status(self.spec.topology(), state, j) != matching::NodeStatus::Active
            }
            ProtocolKind::TokenRing { .. } => true,
        }
    }

    /// Fraction of nodes that are matched (matching only; `None` otherwise).
    pub fn matched_fraction(&self, state: &GlobalState) -> Option<f64> {
        match self.kind {
            ProtocolKind::Matching => {
                let n = self.spec.node_count();
                Some(matching::matched_count(self.spec.topology(), state) as f64 / n as f64)
            }
            ProtocolKind::TokenRing { .. } => None,
        }
    }
}
