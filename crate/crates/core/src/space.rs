//! Mixed-radix indexing of a program's full state space.

use crate::error::{ModelError, Result};
use crate::program::ProgramSpec;
use crate::state::GlobalState;
use crate::value::Domain;

/// Default cap on enumerated states.
pub const DEFAULT_STATE_CAP: u64 = 2_000_000;

/// Bijection between `0..size` and the total states of a program. Variable
/// `(node, slot)` is digit `node * vars_per_node + slot`, node 0 least
/// significant.
#[derive(Clone, Debug)]
pub struct StateSpace {
    domains: Vec<Domain>,
    vars_per_node: usize,
    size: u64,
}

impl StateSpace {
    pub fn new(spec: &ProgramSpec, cap: u64) -> Result<Self> {
        let vars_per_node = spec.vars_per_node();
        let domains: Vec<Domain> =
            (0..spec.node_count()).flat_map(|_| spec.vars().iter().map(|d| d.domain.clone())).collect();
        let mut size: u128 = 1;
        for d in &domains {
            size = size.saturating_mul(u128::from(d.size()));
        }
        if size > u128::from(cap) {
            return Err(ModelError::Capacity { size, cap });
        }
        Ok(StateSpace { domains, vars_per_node, size: size as u64 })
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn decode(&self, mut idx: u64) -> GlobalState {
        let mut values = Vec::with_capacity(self.domains.len());
        for d in &self.domains {
            let radix = d.size();
            values.push(d.value_at(idx % radix));
            idx /= radix;
        }
        GlobalState::new(self.vars_per_node, values)
    }

    /// `None` when some value is outside its domain.
    pub fn encode(&self, state: &GlobalState) -> Option<u64> {
        let mut idx = 0u64;
        for (d, v) in self.domains.iter().zip(state.values()).rev() {
            idx = idx * d.size() + d.index_of(v)?;
        }
        Some(idx)
    }

    pub fn states(&self) -> impl Iterator<Item = GlobalState> + '_ {
        (0..self.size).map(|i| self.decode(i))
    }
}
