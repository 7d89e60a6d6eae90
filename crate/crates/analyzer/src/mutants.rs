//! Deliberately broken variants of the shipped protocols. Each must fail
//! verification; a checker that accepts one of them is not looking.

use std::sync::Arc;

use kvstab_core::protocols::matching::{self, M, P};
use kvstab_core::protocols::token_ring::{self, X};
use kvstab_core::{GraphTopology, LocalView, NodeId, ProgramSpec, Result, Rule, Value};

fn token_mutant(n_nodes: usize, k: u32, inc_inverted: bool, copy_inverted: bool) -> Result<ProgramSpec> {
    token_ring::token_spec_with(
        n_nodes,
        k,
        |n, k| {
            if !inc_inverted {
                return token_ring::increment_rule(n, k);
            }
            let last = NodeId::from(n - 1);
            Rule::new(
                "Increment",
                move |view| view.own(X) != view.get(last, X),
                move |view| {
                    let x = view.own(X).as_int().expect("integer");
                    vec![(X, Value::Int((x + 1) % i64::from(k)))]
                },
            )
        },
        |j, n| {
            if !copy_inverted {
                return token_ring::copy_rule(j, n);
            }
            let pred = NodeId::from((j.index() + n - 1) % n);
            Rule::new("Copy", move |view| view.get(pred, X) == view.own(X), move |view| vec![(X, view.get(pred, X))])
        },
    )
}

/// Token ring whose node 0 increments when it differs from node N.
pub fn token_increment_guard_inverted(n_nodes: usize, k: u32) -> Result<ProgramSpec> {
    token_mutant(n_nodes, k, true, false)
}

/// Token ring whose other nodes copy when they already agree.
pub fn token_copy_guard_inverted(n_nodes: usize, k: u32) -> Result<ProgramSpec> {
    token_mutant(n_nodes, k, false, true)
}

fn pointer(v: Value) -> Option<NodeId> {
    match v {
        Value::Node(n) => Some(n),
        _ => None,
    }
}

fn seduction_target_any(view: &LocalView) -> Option<NodeId> {
    let v = view.owner();
    let married = match pointer(view.own(P)) {
        Some(u) if u != v && view.covers(u) => pointer(view.get(u, P)) == Some(v),
        _ => false,
    };
    if (view.own(M) == Value::Bool(true)) != married || view.own(M) == Value::Bool(true) || view.own(P) != Value::Null {
        return None;
    }
    if view.neighbors().any(|u| pointer(view.get(u, P)) == Some(v)) {
        return None;
    }
    view.neighbors().filter(|&u| view.get(u, P) == Value::Null && view.get(u, M) != Value::Bool(true)).max()
}

/// Matching whose Seduction may target a smaller neighbor.
pub fn matching_seduction_unordered(topology: Arc<GraphTopology>) -> ProgramSpec {
    let seduction = Rule::new(
        "Seduction",
        |view| seduction_target_any(view).is_some(),
        |view| vec![(P, Value::Node(seduction_target_any(view).expect("guard ensures a target")))],
    );
    matching::matching_spec_with_rules(
        topology,
        vec![
            matching::sanitize_rule(),
            matching::update_rule(),
            matching::marriage_rule(),
            seduction,
            matching::abandonment_rule(),
        ],
    )
}

pub fn matching_without_abandonment(topology: Arc<GraphTopology>) -> ProgramSpec {
    matching::matching_spec_with_rules(
        topology,
        vec![matching::sanitize_rule(), matching::update_rule(), matching::marriage_rule(), matching::seduction_rule()],
    )
}

pub fn matching_without_update(topology: Arc<GraphTopology>) -> ProgramSpec {
    matching::matching_spec_with_rules(
        topology,
        vec![
            matching::sanitize_rule(),
            matching::marriage_rule(),
            matching::seduction_rule(),
            matching::abandonment_rule(),
        ],
    )
}
