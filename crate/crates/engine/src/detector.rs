//! Termination detection by repeated read-only scans.
//!
//! A scan reads every node's variables, batch by batch, from all replicas.
//! When a scan finds every node settled and the previous scan found exactly
//! the same values and version clocks, nothing changed in between and the
//! system has terminated. Otherwise the latest scan becomes the baseline for
//! the next one.

use kvstab_core::{GlobalState, NodeId, ProtocolInstance, Value};
use kvstab_store::{Key, ReadResult, VectorClock};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RestartReason {
    /// Some node has an enabled action or is still Active.
    Unsettled(NodeId),
    /// Settled, but some node differs from the previous scan.
    Changed(NodeId),
    /// First clean scan; a confirming scan is needed.
    NoBaseline,
    QuorumError,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScanResult {
    Terminated,
    Restarted(RestartReason),
}

type NodeRecord = (Vec<Value>, VectorClock);

pub struct Detector {
    instance: ProtocolInstance,
    batch: usize,
    cursor: usize,
    current: Vec<NodeRecord>,
    baseline: Option<Vec<NodeRecord>>,
    scans: u64,
}

impl Detector {
    pub fn new(instance: ProtocolInstance, batch: usize) -> Self {
        assert!(batch > 0);
        Detector { instance, batch, cursor: 0, current: Vec::new(), baseline: None, scans: 0 }
    }

    /// Completed scans so far.
    pub fn scans(&self) -> u64 {
        self.scans
    }

    fn node_count(&self) -> usize {
        self.instance.spec.node_count()
    }

    /// Whether the next batch starts a new scan.
    pub fn at_scan_start(&self) -> bool {
        self.cursor == 0
    }

    /// Keys for the next batch of the current scan.
    pub fn next_keys(&self) -> Vec<Key> {
        let vpn = self.instance.spec.vars_per_node();
        let end = (self.cursor + self.batch).min(self.node_count());
        (self.cursor..end).flat_map(|j| (0..vpn).map(move |slot| Key::var(NodeId::from(j), slot))).collect()
    }

    /// Records a batch read. Returns the verdict when this batch ends a scan.
    pub fn on_batch(&mut self, results: &[ReadResult]) -> Option<ScanResult> {
        let vpn = self.instance.spec.vars_per_node();
        for chunk in results.chunks(vpn) {
            let values = chunk.iter().map(|r| r.value).collect();
            let mut clock = VectorClock::new();
            for r in chunk {
                clock.merge_in(&r.context);
            }
            self.current.push((values, clock));
        }
        self.cursor += results.len() / vpn;
        if self.cursor < self.node_count() {
            return None;
        }
        Some(self.finish_scan())
    }

    /// A failed read restarts the current scan; the baseline is kept.
    pub fn on_error(&mut self) -> ScanResult {
        self.cursor = 0;
        self.current.clear();
        ScanResult::Restarted(RestartReason::QuorumError)
    }

    fn finish_scan(&mut self) -> ScanResult {
        self.scans += 1;
        self.cursor = 0;
        let scan = std::mem::take(&mut self.current);
        let values = scan.iter().flat_map(|(v, _)| v.iter().copied()).collect();
        let snapshot = GlobalState::new(self.instance.spec.vars_per_node(), values);
        if let Some(j) = self.instance.topology().nodes().find(|&j| !self.instance.node_settled(&snapshot, j)) {
            self.baseline = None;
            return ScanResult::Restarted(RestartReason::Unsettled(j));
        }
        let verdict = match &self.baseline {
            None => ScanResult::Restarted(RestartReason::NoBaseline),
            Some(base) => match base.iter().zip(&scan).position(|(a, b)| a != b) {
                None => ScanResult::Terminated,
                Some(j) => ScanResult::Restarted(RestartReason::Changed(NodeId::from(j))),
            },
        };
        self.baseline = Some(scan);
        verdict
    }
}
