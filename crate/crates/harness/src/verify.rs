//! Exhaustive checks on small instances, rendered as text.

use std::fmt::Write as _;

use kvstab_analyzer::{
    build_transition_system, cvf_transitions, max_recovery_by, max_recovery_steps, minimal_k, single_corruptions,
    verify_contained_k_active, verify_silent, verify_stabilization, AdversaryKind, Report, TransitionSystem,
};
use kvstab_core::{ProtocolInstance, DEFAULT_STATE_CAP};

use crate::error::Result;

/// Longest recovery bounds, when the program stabilizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RecoveryBounds {
    pub from_all: u64,
    pub from_single_corruption: u64,
    /// Most executions of node 0 along a recovery from a single corruption.
    pub node0_from_single_corruption: u64,
}

#[derive(Clone, Debug)]
pub struct VerifySummary {
    pub instance: String,
    pub states: usize,
    pub stabilization: Report,
    pub silence: Report,
    pub recovery: Option<RecoveryBounds>,
    /// Smallest k for contained k-active stabilization against cvfs
    /// derived from the program's actions.
    pub minimal_contained_k: Option<u32>,
}

fn recovery_bounds(ts: &TransitionSystem, inv: &[bool]) -> Result<RecoveryBounds> {
    let all: Vec<u32> = ts.states().collect();
    let corr = single_corruptions(ts, inv);
    Ok(RecoveryBounds {
        from_all: max_recovery_steps(ts, inv, &all)?,
        from_single_corruption: max_recovery_steps(ts, inv, &corr)?,
        node0_from_single_corruption: max_recovery_by(ts, inv, &corr, |l| u64::from(l.node.index() == 0))?,
    })
}

pub fn verify_instance(instance: &ProtocolInstance, label: &str) -> Result<VerifySummary> {
    let ts = build_transition_system(&instance.spec, DEFAULT_STATE_CAP)?;
    let inv = ts.invariant_mask(&instance.invariant);
    let stabilization = Report::new("stabilization", label, verify_stabilization(&ts, &inv), &ts);
    let silence = Report::new("silent stabilization", label, verify_silent(&ts, &inv), &ts);
    let (recovery, minimal_contained_k) = if stabilization.passed() {
        let bounds = recovery_bounds(&ts, &inv)?;
        let adv = cvf_transitions(&ts, AdversaryKind::ActionDerivedCvf, &inv);
        let max_k = u32::try_from(bounds.from_all + 1).unwrap_or(u32::MAX);
        let k = minimal_k(max_k, |k| verify_contained_k_active(&ts, &adv, k, &inv))?;
        (Some(bounds), k)
    } else {
        (None, None)
    };
    Ok(VerifySummary {
        instance: label.to_string(),
        states: ts.state_count(),
        stabilization,
        silence,
        recovery,
        minimal_contained_k,
    })
}

pub fn render(summary: &VerifySummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "== {} ({} states)", summary.instance, summary.states);
    let _ = write!(out, "{}", summary.stabilization);
    let _ = write!(out, "{}", summary.silence);
    match summary.recovery {
        Some(b) => {
            let _ = writeln!(out, "longest recovery from any state: {}", b.from_all);
            let _ = writeln!(out, "longest recovery after one corruption: {}", b.from_single_corruption);
            let _ = writeln!(out, "node 0 executions after one corruption: {}", b.node0_from_single_corruption);
        }
        None => {
            let _ = writeln!(out, "recovery bounds: unbounded");
        }
    }
    match summary.minimal_contained_k {
        Some(k) => {
            let _ = writeln!(out, "minimal contained k (action-derived cvfs): {k}");
        }
        None => {
            let _ = writeln!(out, "minimal contained k (action-derived cvfs): none");
        }
    }
    out
}
