use std::collections::BTreeSet;

use kvstab_core::{Domain, GlobalState, LocalView, NodeId, Value};

use crate::system::TransitionSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AdversaryKind {
    /// No adversary transitions.
    Empty,
    /// Any change to the variables of any single node.
    ArbitraryOneNode,
    /// A node executes one of its actions on a view whose neighbor entries
    /// may hold any in-domain values; the node's own entries are current.
    ActionDerivedCvf,
    /// As `ActionDerivedCvf`, but views are always current. Yields δ_p
    /// without its self-loops.
    ActionDerivedFresh,
    /// Arbitrary single-node changes, but only out of states outside the
    /// invariant; used to exercise adversaries that respect closure.
    ArbitraryOneNodeOutsideInvariant,
}

impl AdversaryKind {
    pub fn name(&self) -> &'static str {
        match self {
            AdversaryKind::Empty => "empty",
            AdversaryKind::ArbitraryOneNode => "arbitrary-one-node",
            AdversaryKind::ActionDerivedCvf => "action-derived-cvf",
            AdversaryKind::ActionDerivedFresh => "action-derived-fresh",
            AdversaryKind::ArbitraryOneNodeOutsideInvariant => "arbitrary-one-node-outside-invariant",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AdvEdge {
    pub to: u32,
    pub node: NodeId,
}

/// Adversary transitions over the states of a [`TransitionSystem`]. Every
/// edge connects states that differ in the variables of exactly one node.
pub struct AdversaryModel {
    pub kind: AdversaryKind,
    offsets: Vec<usize>,
    edges: Vec<AdvEdge>,
}

impl AdversaryModel {
    pub fn empty(state_count: usize) -> Self {
        AdversaryModel { kind: AdversaryKind::Empty, offsets: vec![0; state_count + 1], edges: Vec::new() }
    }

    pub fn successors(&self, idx: u32) -> &[AdvEdge] {
        let i = idx as usize;
        &self.edges[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.offsets.len() - 1).flat_map(move |s| self.successors(s as u32).iter().map(move |e| (s as u32, e.to)))
    }
}

/// Every combination of one node's variable values, in domain order.
fn node_assignments(domains: &[Domain]) -> Vec<Vec<Value>> {
    let mut out = vec![Vec::new()];
    for d in domains {
        let values = d.values();
        out = out
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect();
    }
    out
}

/// Builds the adversary of the given kind. `invariant` is consulted only by
/// kinds that depend on it.
pub fn cvf_transitions(ts: &TransitionSystem, kind: AdversaryKind, invariant: &[bool]) -> AdversaryModel {
    let spec = ts.spec();
    let topology = spec.topology();
    let vpn = spec.vars_per_node();
    let domains: Vec<Domain> = spec.vars().iter().map(|d| d.domain.clone()).collect();
    let assignments = node_assignments(&domains);

    // For action-derived kinds: per node, the own-value outcomes reachable
    // from each own-value tuple under some unconstrained neighbor view.
    let stale_outcomes: Vec<Vec<BTreeSet<Vec<Value>>>> = if kind == AdversaryKind::ActionDerivedCvf {
        topology
            .nodes()
            .map(|j| {
                let nodes = topology.closed_neighborhood(j).expect("node exists").to_vec();
                let neighbor_count = nodes.len() - 1;
                let neighbor_views: Vec<Vec<Vec<Value>>> = (0..neighbor_count).fold(vec![Vec::new()], |acc, _| {
                    acc.into_iter()
                        .flat_map(|prefix| {
                            assignments.iter().map(move |a| {
                                let mut p = prefix.clone();
                                p.push(a.clone());
                                p
                            })
                        })
                        .collect()
                });
                assignments
                    .iter()
                    .map(|own| {
                        let mut outcomes = BTreeSet::new();
                        for nv in &neighbor_views {
                            let mut values = Vec::with_capacity(nodes.len() * vpn);
                            let mut it = nv.iter();
                            for &n in &nodes {
                                let vals = if n == j { own } else { it.next().expect("neighbor") };
                                values.extend_from_slice(vals);
                            }
                            let view = LocalView::from_parts(j, nodes.clone(), vpn, values);
                            for a in spec.enabled_on(&view) {
                                let mut out = own.clone();
                                for (slot, v) in a.execute(&view) {
                                    out[slot] = v;
                                }
                                if out != *own {
                                    outcomes.insert(out);
                                }
                            }
                        }
                        outcomes
                    })
                    .collect()
            })
            .collect()
    } else {
        Vec::new()
    };

    let mut offsets = Vec::with_capacity(ts.state_count() + 1);
    let mut edges = Vec::new();
    offsets.push(0);
    let space = ts.space();
    for idx in ts.states() {
        let s = ts.state(idx);
        let mut targets: BTreeSet<(u32, NodeId)> = BTreeSet::new();
        let push = |s: &GlobalState, j: NodeId, vals: &[Value], targets: &mut BTreeSet<(u32, NodeId)>| {
            let mut t = s.clone();
            t.node_values_mut(j).copy_from_slice(vals);
            let to = space.encode(&t).expect("in-domain target") as u32;
            if to != idx {
                targets.insert((to, j));
            }
        };
        match kind {
            AdversaryKind::Empty => {}
            AdversaryKind::ArbitraryOneNode | AdversaryKind::ArbitraryOneNodeOutsideInvariant => {
                let allowed = kind == AdversaryKind::ArbitraryOneNode || !invariant[idx as usize];
                if allowed {
                    for j in topology.nodes() {
                        for a in &assignments {
                            push(&s, j, a, &mut targets);
                        }
                    }
                }
            }
            AdversaryKind::ActionDerivedCvf => {
                for j in topology.nodes() {
                    let own = s.node_values(j).to_vec();
                    let own_idx = assignments.iter().position(|a| *a == own).expect("own tuple");
                    for out in &stale_outcomes[j.index()][own_idx] {
                        push(&s, j, out, &mut targets);
                    }
                }
            }
            AdversaryKind::ActionDerivedFresh => {
                for e in ts.successors(idx) {
                    if e.to != idx {
                        targets.insert((e.to, e.label.node));
                    }
                }
            }
        }
        edges.extend(targets.into_iter().map(|(to, node)| AdvEdge { to, node }));
        offsets.push(edges.len());
    }
    AdversaryModel { kind, offsets, edges }
}
