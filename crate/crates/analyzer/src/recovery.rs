use crate::adversary::{cvf_transitions, AdversaryKind};
use crate::error::{AnalyzerError, Result};
use crate::system::{Label, TransitionSystem};

/// Longest program path from any state in `from` to its first invariant
/// state, counting every transition once.
pub fn max_recovery_steps(ts: &TransitionSystem, invariant: &[bool], from: &[u32]) -> Result<u64> {
    max_recovery_by(ts, invariant, from, |_| 1)
}

/// As [`max_recovery_steps`], with a per-transition weight. With a weight of
/// 1 for one node's transitions and 0 otherwise, this is the largest number
/// of executions of that node along any recovery path.
pub fn max_recovery_by<W>(ts: &TransitionSystem, invariant: &[bool], from: &[u32], weight: W) -> Result<u64>
where
    W: Fn(Label) -> u64,
{
    const UNKNOWN: u64 = u64::MAX;
    const ACTIVE: u64 = u64::MAX - 1;
    let mut depth = vec![UNKNOWN; ts.state_count()];
    let mut best = 0;
    for &root in from {
        if invariant[root as usize] {
            continue;
        }
        if depth[root as usize] == UNKNOWN {
            let mut stack: Vec<(u32, usize, u64)> = vec![(root, 0, 0)];
            depth[root as usize] = ACTIVE;
            while let Some(frame) = stack.last_mut() {
                let (s, pos) = (frame.0, frame.1);
                let out = ts.successors(s);
                if out.is_empty() {
                    return Err(AnalyzerError::Unbounded(format!(
                        "state {} is a deadlock outside the invariant",
                        ts.state(s)
                    )));
                }
                if pos == out.len() {
                    depth[s as usize] = frame.2;
                    stack.pop();
                    continue;
                }
                frame.1 += 1;
                let e = out[pos];
                let t = e.to as usize;
                let w = weight(e.label);
                if invariant[t] {
                    frame.2 = frame.2.max(w);
                    continue;
                }
                match depth[t] {
                    UNKNOWN => {
                        depth[t] = ACTIVE;
                        // Revisit this edge once `t` is done.
                        frame.1 -= 1;
                        stack.push((e.to, 0, 0));
                    }
                    ACTIVE => {
                        return Err(AnalyzerError::Unbounded(format!(
                            "cycle outside the invariant through {}",
                            ts.state(e.to)
                        )));
                    }
                    d => frame.2 = frame.2.max(w + d),
                }
            }
        }
        best = best.max(depth[root as usize]);
    }
    Ok(best)
}

/// States reachable from the invariant by changing the variables of one
/// node arbitrarily, including the invariant states themselves.
pub fn single_corruptions(ts: &TransitionSystem, invariant: &[bool]) -> Vec<u32> {
    let adv = cvf_transitions(ts, AdversaryKind::ArbitraryOneNode, invariant);
    let mut reached = invariant.to_vec();
    for (s, t) in adv.pairs() {
        if invariant[s as usize] {
            reached[t as usize] = true;
        }
    }
    ts.states().filter(|&s| reached[s as usize]).collect()
}
