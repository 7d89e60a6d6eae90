//! Topology generation and fingerprinting.

use std::sync::Arc;

use kvstab_core::{GraphTopology, ProtocolInstance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Generator, ProtocolChoice, TopologyConfig};
use crate::error::Result;

pub fn build_topology(config: &TopologyConfig) -> Result<GraphTopology> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let topology = match config.generator {
        Generator::Ring => GraphTopology::ring(config.nodes)?,
        Generator::RandomRegular { degree } => GraphTopology::random_regular(config.nodes, degree, &mut rng)?,
        Generator::Gnp { p } => GraphTopology::gnp(config.nodes, p, &mut rng)?,
    };
    Ok(topology)
}

pub fn build_instance(config: &ExperimentConfig) -> Result<ProtocolInstance> {
    Ok(match config.protocol {
        ProtocolChoice::Matching => ProtocolInstance::matching(Arc::new(build_topology(&config.topology)?)),
        ProtocolChoice::TokenRing { k } => ProtocolInstance::token_ring(config.topology.nodes, k)?,
    })
}

/// SHA-256 of the node count and sorted edge list, as lowercase hex.
pub fn topology_hash(topology: &GraphTopology) -> String {
    let mut hasher = Sha256::new();
    hasher.update(format!("{}\n", topology.node_count()));
    for (a, b) in topology.edges() {
        hasher.update(format!("{a} {b}\n"));
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Edge list, one `a b` pair per line after a `nodes N` header.
pub fn edge_list(topology: &GraphTopology) -> String {
    let mut out = format!("nodes {}\n", topology.node_count());
    for (a, b) in topology.edges() {
        out.push_str(&format!("{a} {b}\n"));
    }
    out
}
