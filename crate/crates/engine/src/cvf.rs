use kvstab_core::{Assignment, LocalView, NodeId, ProgramSpec, Value};
use kvstab_store::Key;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CvfKind {
    /// The stale read left the state as a fresh read would have, or did not
    /// change it at all.
    Stuttering,
    StateChanging,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReadEntry {
    pub key: String,
    pub read: String,
    pub oracle: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CvfEvent {
    pub time_us: u64,
    pub client: usize,
    pub node: u32,
    /// Rule executed on the stale view; `None` if no rule was enabled on it.
    pub rule: Option<String>,
    pub read_set: Vec<ReadEntry>,
    pub kind: CvfKind,
}

/// The acting node's values after `assignment` is written over `base`.
fn own_after(base: &[Value], assignment: Option<&Assignment>) -> Vec<Value> {
    let mut out = base.to_vec();
    if let Some(a) = assignment {
        for &(slot, v) in a {
            out[slot] = v;
        }
    }
    out
}

/// Audits a step's read set at commit time.
///
/// `view` holds the values the client read and `fresh` the oracle values of
/// the same variables. `executed` is the assignment the client is about to
/// write. Returns `None` when every read was current. Otherwise the event is
/// `StateChanging` when the written state differs both from what a fresh
/// view would have produced and from the current state, and `Stuttering` in
/// every other case, including stale reads that enabled nothing.
pub fn audit_read_set(
    spec: &ProgramSpec,
    view: &LocalView,
    fresh: &LocalView,
    executed: Option<&Assignment>,
) -> Option<CvfKind> {
    if view.values() == fresh.values() {
        return None;
    }
    let Some(assignment) = executed else {
        return Some(CvfKind::Stuttering);
    };
    let current = fresh.node_values(fresh.owner());
    let written = own_after(current, Some(assignment));
    let fresh_assignment = spec.first_enabled(fresh).map(|a| a.execute(fresh));
    let fresh_outcome = own_after(current, fresh_assignment.as_ref());
    if written != fresh_outcome && written != current {
        Some(CvfKind::StateChanging)
    } else {
        Some(CvfKind::Stuttering)
    }
}

pub fn read_entries(keys: &[Key], view: &LocalView, fresh: &LocalView) -> Vec<ReadEntry> {
    let vpn = view.vars_per_node();
    keys.iter()
        .map(|k| {
            let var = k.as_var().expect("read set holds program variables");
            let (node, slot) = (var.node, var.slot as usize);
            debug_assert!(slot < vpn);
            ReadEntry {
                key: k.to_string(),
                read: view.get(node, slot).to_string(),
                oracle: fresh.get(node, slot).to_string(),
            }
        })
        .collect()
}

/// Keys of every variable in `j`'s closed neighborhood, node by node.
pub fn neighborhood_keys(spec: &ProgramSpec, j: NodeId) -> Vec<Key> {
    let vpn = spec.vars_per_node();
    spec.topology()
        .closed_neighborhood(j)
        .expect("assigned node exists")
        .iter()
        .flat_map(|&n| (0..vpn).map(move |slot| Key::var(n, slot)))
        .collect()
}
