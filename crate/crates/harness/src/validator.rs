//! A maximal-matching checker written against the raw edge list, sharing
//! no code with the protocol definition.

use std::collections::BTreeSet;
use std::fmt;

use kvstab_core::{GlobalState, GraphTopology, NodeId, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MatchingFlaw {
    /// `p.v` names a node that is not a neighbor of `v`.
    NotANeighbor { node: NodeId },
    /// `p.v = u` but `p.u != v`.
    Unreciprocated { node: NodeId },
    /// `m.v` disagrees with whether `v` is matched.
    FlagMismatch { node: NodeId },
    /// Both endpoints of an edge are unmatched.
    UnmatchedEdge { a: NodeId, b: NodeId },
    /// A variable holds a value outside its type.
    BadValue { node: NodeId },
}

impl fmt::Display for MatchingFlaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatchingFlaw::NotANeighbor { node } => write!(f, "node {node} points to a non-neighbor"),
            MatchingFlaw::Unreciprocated { node } => write!(f, "node {node} points to a node that does not point back"),
            MatchingFlaw::FlagMismatch { node } => write!(f, "node {node} has a wrong married flag"),
            MatchingFlaw::UnmatchedEdge { a, b } => write!(f, "edge {a}-{b} has both endpoints unmatched"),
            MatchingFlaw::BadValue { node } => write!(f, "node {node} holds an ill-typed value"),
        }
    }
}

/// Checks that the pointers (slot 0) form a matching, the flags (slot 1)
/// mark exactly the matched nodes, and the matching is maximal.
pub fn check_maximal_matching(topology: &GraphTopology, state: &GlobalState) -> Result<(), MatchingFlaw> {
    let edges: BTreeSet<(u32, u32)> = topology.edges().iter().map(|&(a, b)| (a.0, b.0)).collect();
    let adjacent = |a: u32, b: u32| edges.contains(&(a.min(b), a.max(b)));
    let n = state.node_count() as u32;
    let mut partner: Vec<Option<u32>> = Vec::with_capacity(n as usize);
    for v in 0..n {
        partner.push(match state.get(NodeId(v), 0) {
            Value::Null => None,
            Value::Node(u) if adjacent(v, u.0) => Some(u.0),
            Value::Node(_) => return Err(MatchingFlaw::NotANeighbor { node: NodeId(v) }),
            _ => return Err(MatchingFlaw::BadValue { node: NodeId(v) }),
        });
    }
    for v in 0..n {
        if let Some(u) = partner[v as usize] {
            if partner[u as usize] != Some(v) {
                return Err(MatchingFlaw::Unreciprocated { node: NodeId(v) });
            }
        }
        let flag = match state.get(NodeId(v), 1) {
            Value::Bool(b) => b,
            _ => return Err(MatchingFlaw::BadValue { node: NodeId(v) }),
        };
        if flag != partner[v as usize].is_some() {
            return Err(MatchingFlaw::FlagMismatch { node: NodeId(v) });
        }
    }
    for &(a, b) in &edges {
        if partner[a as usize].is_none() && partner[b as usize].is_none() {
            return Err(MatchingFlaw::UnmatchedEdge { a: NodeId(a), b: NodeId(b) });
        }
    }
    Ok(())
}
