//! Dijkstra's K-state token ring on nodes `0..=N`.

use std::sync::Arc;

use crate::error::{ModelError, Result};
use crate::graph::{GraphTopology, NodeId};
use crate::program::{ActionDef, ProgramSpec, Rule};
use crate::state::{GlobalState, VarDecl};
use crate::value::{Domain, Value};

pub const X: usize = 0;

fn x_of(v: Value) -> i64 {
    v.as_int().expect("token ring variable is an integer")
}

fn predecessor(j: NodeId, n_nodes: usize) -> NodeId {
    NodeId::from((j.index() + n_nodes - 1) % n_nodes)
}

/// `x.0 = x.N → x.0 := (x.0 + 1) mod K`
pub fn increment_rule(n_nodes: usize, k: u32) -> Rule {
    let last = NodeId::from(n_nodes - 1);
    Rule::new(
        "Increment",
        move |view| view.own(X) == view.get(last, X),
        move |view| vec![(X, Value::Int((x_of(view.own(X)) + 1) % i64::from(k)))],
    )
}

/// `x.(j-1) ≠ x.j → x.j := x.(j-1)`
pub fn copy_rule(j: NodeId, n_nodes: usize) -> Rule {
    let pred = predecessor(j, n_nodes);
    Rule::new("Copy", move |view| view.get(pred, X) != view.own(X), move |view| vec![(X, view.get(pred, X))])
}

fn check_params(n_nodes: usize, k: u32) -> Result<()> {
    if n_nodes < 2 {
        return Err(ModelError::InvalidParameter(format!("token ring needs at least 2 nodes, got {n_nodes}")));
    }
    if k < 2 {
        return Err(ModelError::InvalidParameter(format!("K must be at least 2, got {k}")));
    }
    Ok(())
}

pub fn token_vars(k: u32) -> Vec<VarDecl> {
    vec![VarDecl::new("x", Domain::IntRange { lo: 0, hi: i64::from(k) }, Value::Int(0))]
}

/// Ring program with node 0 running `increment` and every other node
/// running `copy`; the closures receive `(node, n_nodes)`.
pub fn token_spec_with<F, G>(n_nodes: usize, k: u32, increment: F, copy: G) -> Result<ProgramSpec>
where
    F: Fn(usize, u32) -> Rule,
    G: Fn(NodeId, usize) -> Rule,
{
    check_params(n_nodes, k)?;
    let topology = Arc::new(GraphTopology::ring(n_nodes)?);
    let inc = Arc::new(increment(n_nodes, k));
    let actions = topology
        .nodes()
        .map(|j| {
            let rule = if j.index() == 0 { inc.clone() } else { Arc::new(copy(j, n_nodes)) };
            vec![ActionDef::new(j, rule)]
        })
        .collect();
    ProgramSpec::new(topology, token_vars(k), actions)
}

pub fn token_spec(n_nodes: usize, k: u32) -> Result<ProgramSpec> {
    token_spec_with(n_nodes, k, increment_rule, copy_rule)
}

/// `∃j ∈ [0, N]: (∀k ≤ j: x.k = x.0) ∧ (∀k > j: x.0 = (x.k + 1) mod K)`
pub fn token_invariant(state: &GlobalState, k: u32) -> bool {
    let xs: Vec<i64> = (0..state.node_count()).map(|i| x_of(state.get(NodeId::from(i), X))).collect();
    let k = i64::from(k);
    let x0 = xs[0];
    // Longest prefix equal to x.0; any valid j lies inside it.
    let prefix = xs.iter().take_while(|&&x| x == x0).count();
    (1..=prefix).any(|len| xs[len..].iter().all(|&x| x0 == (x + 1) % k))
}

pub fn state_of(xs: &[i64]) -> GlobalState {
    GlobalState::new(1, xs.iter().map(|&x| Value::Int(x)).collect())
}
