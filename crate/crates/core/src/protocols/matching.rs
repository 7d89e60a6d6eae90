//! Self-stabilizing maximal matching with proposal pointers.
//!
//! Each node `v` holds `p.v` (the neighbor it proposes to, or null) and
//! `m.v` (whether it believes it is married). `v` is married when
//! `p.v = u`, `u` is a neighbor and `p.u = v`.
//!
//! Rules, in priority order (`Update` pre-empts every other rule at a node):
//!
//! * `Sanitize`: `p.v ∉ N(v) ∪ {null}` → `p.v := null`
//! * `Update`: `m.v ≠ married(v)` → `m.v := married(v)`
//! * `Marriage`: `¬m.v ∧ p.v = null ∧ ∃u ∈ N(v): p.u = v ∧ ¬m.u` → `p.v := min u`
//! * `Seduction`: `¬m.v ∧ p.v = null ∧ ∀u ∈ N(v): p.u ≠ v ∧
//!   ∃u ∈ N(v): u > v ∧ p.u = null ∧ ¬m.u` → `p.v := max u`
//! * `Abandonment`: `¬m.v ∧ p.v = u ∈ N(v) ∧ p.u ≠ v ∧ (m.u ∨ u < v)` → `p.v := null`
//!
//! `N(v)` never contains `v` itself.

use std::sync::Arc;

use crate::graph::{GraphTopology, NodeId};
use crate::program::{ActionDef, ProgramSpec, Rule};
use crate::state::{GlobalState, LocalView, VarDecl};
use crate::value::{Domain, Value};

/// Slot of the proposal pointer `p`.
pub const P: usize = 0;
/// Slot of the married flag `m`.
pub const M: usize = 1;

pub const RULE_ORDER: [&str; 5] = ["Sanitize", "Update", "Marriage", "Seduction", "Abandonment"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NodeStatus {
    Matched,
    /// Unmatched, and every neighbor is married to someone else.
    Dead,
    Active,
}

fn flag(v: Value) -> bool {
    v == Value::Bool(true)
}

fn pointer(v: Value) -> Option<NodeId> {
    match v {
        Value::Node(n) => Some(n),
        _ => None,
    }
}

fn is_neighbor(view: &LocalView, u: NodeId) -> bool {
    u != view.owner() && view.covers(u)
}

fn married_in_view(view: &LocalView) -> bool {
    let v = view.owner();
    match pointer(view.own(P)) {
        Some(u) if is_neighbor(view, u) => pointer(view.get(u, P)) == Some(v),
        _ => false,
    }
}

fn update_pending(view: &LocalView) -> bool {
    flag(view.own(M)) != married_in_view(view)
}

fn free_and_unpointed(view: &LocalView) -> bool {
    !update_pending(view) && !flag(view.own(M)) && view.own(P) == Value::Null
}

fn proposers(view: &LocalView) -> impl Iterator<Item = NodeId> + '_ {
    let v = view.owner();
    view.neighbors().filter(move |&u| pointer(view.get(u, P)) == Some(v) && !flag(view.get(u, M)))
}

fn seduction_target(view: &LocalView) -> Option<NodeId> {
    let v = view.owner();
    if view.neighbors().any(|u| pointer(view.get(u, P)) == Some(v)) {
        return None;
    }
    view.neighbors().filter(|&u| u > v && view.get(u, P) == Value::Null && !flag(view.get(u, M))).max()
}

pub fn sanitize_rule() -> Rule {
    Rule::new(
        "Sanitize",
        |view| !update_pending(view) && matches!(pointer(view.own(P)), Some(u) if !is_neighbor(view, u)),
        |_| vec![(P, Value::Null)],
    )
}

pub fn update_rule() -> Rule {
    Rule::new("Update", update_pending, |view| vec![(M, Value::Bool(married_in_view(view)))])
}

pub fn marriage_rule() -> Rule {
    Rule::new(
        "Marriage",
        |view| free_and_unpointed(view) && proposers(view).next().is_some(),
        |view| {
            let u = proposers(view).min().expect("guard ensures a proposer");
            vec![(P, Value::Node(u))]
        },
    )
}

pub fn seduction_rule() -> Rule {
    Rule::new(
        "Seduction",
        |view| free_and_unpointed(view) && seduction_target(view).is_some(),
        |view| {
            let u = seduction_target(view).expect("guard ensures a target");
            vec![(P, Value::Node(u))]
        },
    )
}

pub fn abandonment_rule() -> Rule {
    Rule::new(
        "Abandonment",
        |view| {
            if update_pending(view) || flag(view.own(M)) {
                return false;
            }
            let v = view.owner();
            match pointer(view.own(P)) {
                Some(u) if is_neighbor(view, u) => {
                    pointer(view.get(u, P)) != Some(v) && (flag(view.get(u, M)) || u < v)
                }
                _ => false,
            }
        },
        |_| vec![(P, Value::Null)],
    )
}

pub fn matching_vars(node_count: usize) -> Vec<VarDecl> {
    vec![
        VarDecl::new("p", Domain::NodeOrNull { nodes: node_count as u32 }, Value::Null),
        VarDecl::new("m", Domain::Bool, Value::Bool(false)),
    ]
}

/// Builds the matching program from explicit rules; every node runs the
/// same rules in the given order.
pub fn matching_spec_with_rules(topology: Arc<GraphTopology>, rules: Vec<Rule>) -> ProgramSpec {
    let rules: Vec<Arc<Rule>> = rules.into_iter().map(Arc::new).collect();
    let actions = topology.nodes().map(|j| rules.iter().map(|r| ActionDef::new(j, r.clone())).collect()).collect();
    let vars = matching_vars(topology.node_count());
    ProgramSpec::new(topology, vars, actions).expect("matching program is well formed")
}

pub fn matching_spec(topology: Arc<GraphTopology>) -> ProgramSpec {
    matching_spec_with_rules(
        topology,
        vec![sanitize_rule(), update_rule(), marriage_rule(), seduction_rule(), abandonment_rule()],
    )
}

/// `married(v)` evaluated on a global state.
pub fn is_married(topology: &GraphTopology, state: &GlobalState, v: NodeId) -> bool {
    match pointer(state.get(v, P)) {
        Some(u) if topology.are_adjacent(v, u) => pointer(state.get(u, P)) == Some(v),
        _ => false,
    }
}

/// The part of the invariant attributable to node `v`; it reads only
/// variables within two hops of `v`.
pub fn locally_legitimate(topology: &GraphTopology, state: &GlobalState, v: NodeId) -> bool {
    let married = is_married(topology, state, v);
    if state.get(v, P) != Value::Null && !married {
        return false;
    }
    if flag(state.get(v, M)) != married {
        return false;
    }
    married || topology.neighbors(v).all(|u| is_married(topology, state, u))
}

/// Symmetric pointers, consistent married flags, and no edge with both
/// endpoints unmatched.
pub fn matching_invariant(topology: &GraphTopology, state: &GlobalState) -> bool {
    topology.nodes().all(|v| locally_legitimate(topology, state, v))
}

pub fn node_status(topology: &GraphTopology, state: &GlobalState, j: NodeId) -> NodeStatus {
    if is_married(topology, state, j) {
        NodeStatus::Matched
    } else if topology.neighbors(j).all(|u| is_married(topology, state, u)) {
        NodeStatus::Dead
    } else {
        NodeStatus::Active
    }
}

pub fn matched_count(topology: &GraphTopology, state: &GlobalState) -> usize {
    topology.nodes().filter(|&v| is_married(topology, state, v)).count()
}

/// Matched pairs `(a, b)` with `a < b`.
pub fn matched_pairs(topology: &GraphTopology, state: &GlobalState) -> Vec<(NodeId, NodeId)> {
    topology
        .nodes()
        .filter_map(|v| match pointer(state.get(v, P)) {
            Some(u) if v < u && is_married(topology, state, v) => Some((v, u)),
            _ => None,
        })
        .collect()
}
