use kvstab_core::{GlobalState, InvariantPredicate, NodeId, ProgramSpec, StateSpace};

use crate::error::Result;

/// Edge label: the acting node and an index into the rule-name table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Label {
    pub node: NodeId,
    pub rule: u16,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub to: u32,
    pub label: Label,
}

/// The complete state space of a program with its transition relation, as
/// an adjacency list over state indices.
pub struct TransitionSystem {
    spec: ProgramSpec,
    space: StateSpace,
    offsets: Vec<usize>,
    edges: Vec<Edge>,
    rules: Vec<String>,
}

impl TransitionSystem {
    pub fn state_count(&self) -> usize {
        self.space.size() as usize
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn spec(&self) -> &ProgramSpec {
        &self.spec
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn state(&self, idx: u32) -> GlobalState {
        self.space.decode(u64::from(idx))
    }

    pub fn index_of(&self, state: &GlobalState) -> Option<u32> {
        self.space.encode(state).map(|i| i as u32)
    }

    pub fn successors(&self, idx: u32) -> &[Edge] {
        let i = idx as usize;
        &self.edges[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn rule_name(&self, label: Label) -> &str {
        &self.rules[label.rule as usize]
    }

    /// Membership of every state in `invariant`.
    pub fn invariant_mask(&self, invariant: &InvariantPredicate) -> Vec<bool> {
        (0..self.space.size()).map(|i| invariant.holds(&self.space.decode(i))).collect()
    }

    pub fn states(&self) -> impl Iterator<Item = u32> {
        0..self.state_count() as u32
    }
}

/// Enumerates every state of `spec` and its fresh-view transitions.
/// Fails when the state space exceeds `cap`.
pub fn build_transition_system(spec: &ProgramSpec, cap: u64) -> Result<TransitionSystem> {
    let space = StateSpace::new(spec, cap.min(u64::from(u32::MAX)))?;
    let mut rules: Vec<String> = Vec::new();
    let mut offsets = Vec::with_capacity(space.size() as usize + 1);
    let mut edges = Vec::new();
    offsets.push(0);
    for idx in 0..space.size() {
        let s = space.decode(idx);
        for (t, action) in spec.successors(&s)? {
            let name = action.rule_name();
            let rule = match rules.iter().position(|r| r == name) {
                Some(i) => i,
                None => {
                    rules.push(name.to_string());
                    rules.len() - 1
                }
            };
            let to = space.encode(&t).expect("successor lies in the state space") as u32;
            edges.push(Edge { to, label: Label { node: action.owner(), rule: rule as u16 } });
        }
        offsets.push(edges.len());
    }
    Ok(TransitionSystem { spec: spec.clone(), space, offsets, edges, rules })
}
