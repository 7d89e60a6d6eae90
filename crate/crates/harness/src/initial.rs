//! Initial states for experiments.

use kvstab_core::protocols::matching::{M, P};
use kvstab_core::{GlobalState, NodeId, ProtocolInstance, ProtocolKind, Value};
use kvstab_engine::{run_des, EngineConfig, EventLog, StopCondition};
use kvstab_store::{LatencyModel, QuorumConfig};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::InitialMode;
use crate::error::{HarnessError, Result};

pub fn gen_initial(mode: InitialMode, instance: &ProtocolInstance, seed: u64) -> Result<GlobalState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match mode {
        InitialMode::NoMatch => {
            if instance.kind != ProtocolKind::Matching {
                return Err(HarnessError::Config("no-match applies to matching only".into()));
            }
            let mut state = instance.spec.default_state();
            for j in instance.topology().nodes() {
                state.set(j, P, Value::Null);
                state.set(j, M, Value::Bool(false));
            }
            Ok(state)
        }
        InitialMode::RandomMatch => Ok(random_state(instance, &mut rng)),
        InitialMode::PerturbedMatch { fraction } => {
            let mut state = legitimate_state(instance, seed)?;
            perturb(instance, &mut state, fraction, &mut rng);
            Ok(state)
        }
    }
}

fn randomize_node(instance: &ProtocolInstance, state: &mut GlobalState, j: NodeId, rng: &mut ChaCha8Rng) {
    for (slot, decl) in instance.spec.vars().iter().enumerate() {
        let i = rng.gen_range(0..decl.domain.size());
        state.set(j, slot, decl.domain.value_at(i));
    }
}

/// Every variable drawn uniformly from its domain.
pub fn random_state(instance: &ProtocolInstance, rng: &mut ChaCha8Rng) -> GlobalState {
    let mut state = instance.spec.default_state();
    for j in instance.topology().nodes() {
        randomize_node(instance, &mut state, j, rng);
    }
    state
}

/// Randomizes every variable of `round(fraction * n)` distinct nodes.
pub fn perturb(
    instance: &ProtocolInstance,
    state: &mut GlobalState,
    fraction: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<NodeId> {
    let n = state.node_count();
    let count = ((fraction.clamp(0.0, 1.0) * n as f64).round() as usize).min(n);
    let mut picked: Vec<NodeId> = index::sample(rng, n, count).into_iter().map(NodeId::from).collect();
    picked.sort();
    for &j in &picked {
        randomize_node(instance, state, j, rng);
    }
    picked
}

/// Runs a single client over a sequential quorum until the invariant holds.
/// Matching starts from no-match; the token ring from a random state.
pub fn legitimate_state(instance: &ProtocolInstance, seed: u64) -> Result<GlobalState> {
    let start = match instance.kind {
        ProtocolKind::Matching => gen_initial(InitialMode::NoMatch, instance, seed)?,
        ProtocolKind::TokenRing { .. } => random_state(instance, &mut ChaCha8Rng::seed_from_u64(seed)),
    };
    let quorum = QuorumConfig::new(3, 2, 2)?;
    let mut config = EngineConfig::new(quorum, false, 1, LatencyModel::zero(), seed);
    config.detector = None;
    config.stop = StopCondition::Invariant;
    let metrics = run_des(instance, &start, &config, &mut EventLog::disabled())?;
    if !metrics.converged {
        return Err(HarnessError::Config("sequential run did not reach the invariant".into()));
    }
    Ok(metrics.final_state)
}
