use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::{GraphTopology, NodeId};
use crate::value::{Domain, Value};

/// Declaration of one per-node variable. Every node carries the same set of
/// variables; a variable is addressed by its slot in the declaration list.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarDecl {
    pub name: String,
    pub domain: Domain,
    /// Value assumed when a variable has never been written.
    pub default: Value,
}

impl VarDecl {
    pub fn new(name: impl Into<String>, domain: Domain, default: Value) -> Self {
        VarDecl { name: name.into(), domain, default }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId {
    pub node: NodeId,
    pub slot: u16,
}

impl VarId {
    pub fn new(node: NodeId, slot: usize) -> Self {
        VarId { node, slot: u16::try_from(slot).expect("variable slot fits in u16") }
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.slot, self.node)
    }
}

/// Total assignment of values to every variable of every node.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GlobalState {
    vars_per_node: usize,
    values: Vec<Value>,
}

impl GlobalState {
    pub fn new(vars_per_node: usize, values: Vec<Value>) -> Self {
        assert!(vars_per_node > 0, "nodes need at least one variable");
        assert_eq!(values.len() % vars_per_node, 0, "state is not total");
        GlobalState { vars_per_node, values }
    }

    pub fn filled(node_count: usize, per_node: &[Value]) -> Self {
        let values = (0..node_count).flat_map(|_| per_node.iter().copied()).collect();
        GlobalState::new(per_node.len(), values)
    }

    pub fn node_count(&self) -> usize {
        self.values.len() / self.vars_per_node
    }

    pub fn vars_per_node(&self) -> usize {
        self.vars_per_node
    }

    pub fn get(&self, node: NodeId, slot: usize) -> Value {
        self.values[node.index() * self.vars_per_node + slot]
    }

    pub fn var(&self, id: VarId) -> Value {
        self.get(id.node, id.slot as usize)
    }

    pub fn set(&mut self, node: NodeId, slot: usize, v: Value) {
        self.values[node.index() * self.vars_per_node + slot] = v;
    }

    pub fn node_values(&self, node: NodeId) -> &[Value] {
        let start = node.index() * self.vars_per_node;
        &self.values[start..start + self.vars_per_node]
    }

    pub fn node_values_mut(&mut self, node: NodeId) -> &mut [Value] {
        let start = node.index() * self.vars_per_node;
        &mut self.values[start..start + self.vars_per_node]
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }

    /// Nodes whose variables differ between `self` and `other`.
    pub fn differing_nodes(&self, other: &GlobalState) -> Vec<NodeId> {
        assert_eq!(self.values.len(), other.values.len());
        (0..self.node_count()).map(NodeId::from).filter(|&n| self.node_values(n) != other.node_values(n)).collect()
    }
}

/// Formats as `(0,1,0)` with one variable per node and as
/// `((#1,true),(#0,true),(null,false))` otherwise.
impl fmt::Display for GlobalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, chunk) in self.values.chunks(self.vars_per_node).enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            if chunk.len() == 1 {
                write!(f, "{}", chunk[0])?;
            } else {
                f.write_str("(")?;
                for (j, v) in chunk.iter().enumerate() {
                    if j > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str(")")?;
            }
        }
        f.write_str(")")
    }
}

/// A snapshot of the variables of a node's closed neighborhood, as seen by
/// whoever evaluates the node's guards. The snapshot may be stale.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalView {
    owner: NodeId,
    nodes: Vec<NodeId>,
    vars_per_node: usize,
    values: Vec<Value>,
}

impl LocalView {
    /// Fresh view of `owner` taken from `state`.
    pub fn extract(topology: &GraphTopology, state: &GlobalState, owner: NodeId) -> Self {
        let nodes = topology.closed_neighborhood(owner).expect("owner is a node of the topology").to_vec();
        let values = nodes.iter().flat_map(|&n| state.node_values(n).iter().copied()).collect();
        LocalView { owner, nodes, vars_per_node: state.vars_per_node(), values }
    }

    /// Builds a view from explicit values laid out node-major in the order of
    /// `nodes`, which must be sorted and contain `owner`.
    pub fn from_parts(owner: NodeId, nodes: Vec<NodeId>, vars_per_node: usize, values: Vec<Value>) -> Self {
        debug_assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(nodes.binary_search(&owner).is_ok(), "view must cover its owner");
        assert_eq!(values.len(), nodes.len() * vars_per_node);
        LocalView { owner, nodes, vars_per_node, values }
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    /// Nodes covered by the view, sorted (the closed neighborhood).
    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn neighbors(&self) -> impl Iterator<Item = NodeId> + '_ {
        let owner = self.owner;
        self.nodes.iter().copied().filter(move |&n| n != owner)
    }

    pub fn covers(&self, node: NodeId) -> bool {
        self.nodes.binary_search(&node).is_ok()
    }

    pub fn vars_per_node(&self) -> usize {
        self.vars_per_node
    }

    /// Value of `slot` at `node`. Panics if the view does not cover `node`,
    /// which means a guard tried to read outside its neighborhood.
    pub fn get(&self, node: NodeId, slot: usize) -> Value {
        let pos = self
            .nodes
            .binary_search(&node)
            .unwrap_or_else(|_| panic!("view of {} does not cover node {node}", self.owner));
        self.values[pos * self.vars_per_node + slot]
    }

    pub fn own(&self, slot: usize) -> Value {
        self.get(self.owner, slot)
    }

    pub fn set(&mut self, node: NodeId, slot: usize, v: Value) {
        let pos = self.nodes.binary_search(&node).expect("node covered by view");
        self.values[pos * self.vars_per_node + slot] = v;
    }

    pub fn node_values(&self, node: NodeId) -> &[Value] {
        let pos = self.nodes.binary_search(&node).expect("node covered by view");
        &self.values[pos * self.vars_per_node..(pos + 1) * self.vars_per_node]
    }

    pub fn values(&self) -> &[Value] {
        &self.values
    }
}
