//! A running copy of the store's converged state, with the invariant kept
//! up to date incrementally.

use kvstab_core::protocols::matching;
use kvstab_core::{GlobalState, NodeId, ProtocolInstance, ProtocolKind, Value};
use kvstab_store::Key;

pub struct OracleMirror {
    instance: ProtocolInstance,
    state: GlobalState,
    /// Nodes failing the local invariant, when the protocol has one.
    bad: Vec<bool>,
    bad_count: usize,
    holds: bool,
    married: Vec<bool>,
    married_count: usize,
    /// Time the state last entered the invariant, if it is in it now.
    entered_at: Option<u64>,
    last_change: u64,
}

impl OracleMirror {
    pub fn new(instance: ProtocolInstance, state: GlobalState, now: u64) -> Self {
        let n = state.node_count();
        let mut m = OracleMirror {
            instance,
            state,
            bad: vec![false; n],
            bad_count: 0,
            holds: false,
            married: vec![false; n],
            married_count: 0,
            entered_at: None,
            last_change: now,
        };
        m.recompute_all();
        if m.holds {
            m.entered_at = Some(now);
        }
        m
    }

    fn recompute_all(&mut self) {
        let nodes: Vec<NodeId> = self.instance.topology().nodes().collect();
        if let Some(local) = self.instance.invariant.local() {
            for &j in &nodes {
                self.bad[j.index()] = !local.check(&self.state, j);
            }
            self.bad_count = self.bad.iter().filter(|&&b| b).count();
            self.holds = self.bad_count == 0;
        } else {
            self.holds = self.instance.invariant.holds(&self.state);
        }
        if self.instance.kind == ProtocolKind::Matching {
            for &j in &nodes {
                self.married[j.index()] = matching::is_married(self.instance.topology(), &self.state, j);
            }
            self.married_count = self.married.iter().filter(|&&b| b).count();
        }
    }

    pub fn instance(&self) -> &ProtocolInstance {
        &self.instance
    }

    pub fn state(&self) -> &GlobalState {
        &self.state
    }

    pub fn get(&self, node: NodeId, slot: usize) -> Value {
        self.state.get(node, slot)
    }

    pub fn invariant_holds(&self) -> bool {
        self.holds
    }

    pub fn entered_at(&self) -> Option<u64> {
        self.entered_at
    }

    /// Time of the most recent value change.
    pub fn last_change(&self) -> u64 {
        self.last_change
    }

    /// Fraction of nodes that are matched; `None` for other protocols.
    pub fn matched_fraction(&self) -> Option<f64> {
        (self.instance.kind == ProtocolKind::Matching)
            .then(|| self.married_count as f64 / self.state.node_count() as f64)
    }

    pub fn apply(&mut self, key: &Key, value: Value, now: u64) {
        let Some(var) = key.as_var() else { return };
        let (w, slot) = (var.node, var.slot as usize);
        if self.state.get(w, slot) == value {
            return;
        }
        self.state.set(w, slot, value);
        self.last_change = now;
        let topology = self.instance.spec.topology_arc().clone();
        if let Some(local) = self.instance.invariant.local() {
            for u in topology.ball(w, local.radius) {
                let now_bad = !local.check(&self.state, u);
                if now_bad != self.bad[u.index()] {
                    self.bad[u.index()] = now_bad;
                    if now_bad {
                        self.bad_count += 1;
                    } else {
                        self.bad_count -= 1;
                    }
                }
            }
            self.set_holds(self.bad_count == 0, now);
        } else {
            let holds = self.instance.invariant.holds(&self.state);
            self.set_holds(holds, now);
        }
        if self.instance.kind == ProtocolKind::Matching {
            for &u in topology.closed_neighborhood(w).expect("node exists") {
                let m = matching::is_married(&topology, &self.state, u);
                if m != self.married[u.index()] {
                    self.married[u.index()] = m;
                    if m {
                        self.married_count += 1;
                    } else {
                        self.married_count -= 1;
                    }
                }
            }
        }
    }

    fn set_holds(&mut self, holds: bool, now: u64) {
        if holds && !self.holds {
            self.entered_at = Some(now);
        } else if !holds {
            self.entered_at = None;
        }
        self.holds = holds;
    }

    /// Full recomputation, for cross-checking the incremental bookkeeping.
    pub fn recomputed_holds(&self) -> bool {
        self.instance.invariant.holds(&self.state)
    }
}
