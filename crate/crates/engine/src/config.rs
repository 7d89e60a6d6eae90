use kvstab_core::NodeId;
use kvstab_store::{LatencyModel, QuorumConfig};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EngineError, Result};

/// Nodes a client is responsible for, in the order it visits them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClientConfig {
    pub id: usize,
    pub scan_order: Vec<NodeId>,
}

/// Node `j` goes to client `j mod clients`; each client then visits its
/// nodes round-robin in a seeded random order.
pub fn assign_static(node_count: usize, clients: usize, seed: u64) -> Vec<ClientConfig> {
    (0..clients)
        .map(|id| {
            let mut scan_order: Vec<NodeId> = (id..node_count).step_by(clients).map(NodeId::from).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(id as u64 + 1)));
            scan_order.shuffle(&mut rng);
            ClientConfig { id, scan_order }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopCondition {
    /// Run until the termination detector fires (silent protocols).
    Detector,
    /// Run until the store's converged state satisfies the invariant.
    Invariant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Nodes read per GET.
    pub batch: usize,
    /// Pause between scans, in microseconds.
    pub pause_us: u64,
}

impl DetectorConfig {
    /// Batches of 32 nodes and a pause of four maximal message delays, so
    /// that writes in flight during one scan have landed before the next.
    pub fn for_latency(latency: &LatencyModel) -> Self {
        DetectorConfig { batch: 32, pause_us: (4 * latency.max_us()).max(1) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub quorum: QuorumConfig,
    pub lme: bool,
    pub clients: usize,
    pub latency: LatencyModel,
    pub seed: u64,
    /// Local processing time a client spends before each step.
    pub think_us: u64,
    pub detector: Option<DetectorConfig>,
    pub stop: StopCondition,
    /// Hard limit on virtual (or wall) time.
    pub max_time_us: u64,
    /// Period of matched-fraction samples, if wanted.
    pub sample_interval_us: Option<u64>,
    /// How many cvf events to keep in the metrics; all are counted.
    pub keep_cvf_events: usize,
}

impl EngineConfig {
    pub fn new(quorum: QuorumConfig, lme: bool, clients: usize, latency: LatencyModel, seed: u64) -> Self {
        EngineConfig {
            quorum,
            lme,
            clients,
            latency,
            seed,
            think_us: 10,
            detector: Some(DetectorConfig::for_latency(&latency)),
            stop: StopCondition::Detector,
            max_time_us: 3_600_000_000,
            sample_interval_us: None,
            keep_cvf_events: 0,
        }
    }

    pub fn validate(&self, node_count: usize) -> Result<()> {
        if self.clients == 0 {
            return Err(EngineError::InvalidConfig("at least one client is needed".into()));
        }
        if self.clients > node_count {
            return Err(EngineError::InvalidConfig(format!(
                "{} clients for {node_count} nodes leaves some client idle",
                self.clients
            )));
        }
        if self.stop == StopCondition::Detector && self.detector.is_none() {
            return Err(EngineError::InvalidConfig("stop on detector without a detector".into()));
        }
        if let Some(d) = self.detector {
            if d.batch == 0 {
                return Err(EngineError::InvalidConfig("detector batch must be positive".into()));
            }
        }
        if self.sample_interval_us == Some(0) {
            return Err(EngineError::InvalidConfig("sample interval must be positive".into()));
        }
        self.quorum.validated()?;
        Ok(())
    }
}
