//! A replicated key-value store in the style of client-driven quorum
//! systems: every replica holds every key, writes carry vector clocks,
//! concurrent versions are retained and resolved last-write-wins on read.
//!
//! The store runs either inside a deterministic discrete-event simulation
//! ([`SimCluster`]) or against real threads and clocks ([`ThreadedCluster`]).

pub mod clock;
pub mod cluster;
pub mod des;
pub mod error;
pub mod key;
pub mod latency;
pub mod quorum;
pub mod session;
pub mod sim;
pub mod stats;
pub mod threaded;
pub mod version;

pub use clock::{vc_compare, ClockOrder, VectorClock, WriterId};
pub use cluster::{ClusterState, Defaults, OracleChange, ReadResult, ReplicaStore, Request};
pub use des::{Completion, OpId, OpReply, SimCluster, StoreEvent};
pub use error::{Result, StoreError};
pub use key::Key;
pub use latency::LatencyModel;
pub use quorum::{classify, Consistency, QuorumConfig};
pub use session::WriterSession;
pub use sim::{Scheduler, SimTime};
pub use stats::{OpStats, StoreStats};
pub use threaded::ThreadedCluster;
pub use version::{resolve, ResolutionPolicy, VersionedValue};
