//! Client logic, independent of how store operations are carried out.

use kvstab_core::{Assignment, LocalView, NodeId, ProgramSpec, Value};
use kvstab_store::{Key, ReadResult, VersionedValue, WriterId, WriterSession};

use crate::config::ClientConfig;
use crate::cvf::{audit_read_set, neighborhood_keys, read_entries, CvfEvent, CvfKind};

pub struct Client {
    pub id: usize,
    scan_order: Vec<NodeId>,
    next: usize,
    session: WriterSession,
}

/// What a client decided from the values it read.
#[derive(Clone, Debug)]
pub struct Decision {
    pub node: NodeId,
    pub keys: Vec<Key>,
    pub view: LocalView,
    /// Rule name and assignment of the first enabled action on the view.
    pub action: Option<(String, Assignment)>,
}

impl Client {
    /// Client `id` writes as `WriterId(id + 1)`; writer 0 installs initial
    /// states.
    pub fn new(config: ClientConfig) -> Self {
        assert!(!config.scan_order.is_empty(), "client {} has no nodes", config.id);
        Client {
            id: config.id,
            scan_order: config.scan_order,
            next: 0,
            session: WriterSession::new(WriterId(config.id as u32 + 1)),
        }
    }

    pub fn assigned(&self) -> &[NodeId] {
        &self.scan_order
    }

    /// The next node in round-robin order.
    pub fn next_node(&mut self) -> NodeId {
        let j = self.scan_order[self.next];
        self.next = (self.next + 1) % self.scan_order.len();
        j
    }

    /// Versions for every slot the assignment writes, with clocks derived
    /// from the read contexts.
    pub fn writes_for(&mut self, decision: &Decision, reads: &[ReadResult], now: u64) -> Vec<(Key, VersionedValue)> {
        let (_, assignment) = decision.action.as_ref().expect("writes need an action");
        assignment
            .iter()
            .map(|&(slot, value)| {
                let key = Key::var(decision.node, slot);
                let read = reads.iter().find(|r| r.key == key).expect("own variables are read");
                let version = self.session.version_for(&key, value, &read.context, now);
                (key, version)
            })
            .collect()
    }
}

/// Builds the node's view from quorum reads (in [`read_keys`] order) and
/// picks the first enabled action.
pub fn decide(spec: &ProgramSpec, node: NodeId, reads: &[ReadResult]) -> Decision {
    let keys: Vec<Key> = reads.iter().map(|r| r.key.clone()).collect();
    let values: Vec<Value> = reads.iter().map(|r| r.value).collect();
    let view = view_from(spec, node, values);
    let action = spec.first_enabled(&view).map(|a| (a.rule_name().to_string(), a.execute(&view)));
    Decision { node, keys, view, action }
}

pub fn read_keys(spec: &ProgramSpec, node: NodeId) -> Vec<Key> {
    neighborhood_keys(spec, node)
}

pub fn view_from(spec: &ProgramSpec, node: NodeId, values: Vec<Value>) -> LocalView {
    let nodes = spec.topology().closed_neighborhood(node).expect("node exists").to_vec();
    LocalView::from_parts(node, nodes, spec.vars_per_node(), values)
}

/// Audits `decision` against current values supplied by `oracle`.
pub fn audit<F>(spec: &ProgramSpec, decision: &Decision, client: usize, now: u64, oracle: F) -> Option<CvfEvent>
where
    F: Fn(NodeId, usize) -> Value,
{
    let fresh_values: Vec<Value> = decision
        .keys
        .iter()
        .map(|k| {
            let v = k.as_var().expect("program variable");
            oracle(v.node, v.slot as usize)
        })
        .collect();
    let fresh = view_from(spec, decision.node, fresh_values);
    let kind: CvfKind = audit_read_set(spec, &decision.view, &fresh, decision.action.as_ref().map(|(_, a)| a))?;
    Some(CvfEvent {
        time_us: now,
        client,
        node: decision.node.0,
        rule: decision.action.as_ref().map(|(r, _)| r.clone()),
        read_set: read_entries(&decision.keys, &decision.view, &fresh),
        kind,
    })
}
