//! The passive-node runtime. Node states live in a quorum store; clients
//! read a node's neighborhood, evaluate its guards and write back the
//! result, optionally under local mutual exclusion. A read-only detector
//! decides when a silent protocol has terminated, and every step is audited
//! against the store's converged state to count consistency violations.

pub mod client;
pub mod config;
pub mod cvf;
pub mod des;
pub mod detector;
pub mod error;
pub mod lme;
pub mod metrics;
pub mod oracle;
pub mod threaded;

pub use client::{audit, decide, Client, Decision};
pub use config::{assign_static, ClientConfig, DetectorConfig, EngineConfig, StopCondition};
pub use cvf::{audit_read_set, CvfEvent, CvfKind, ReadEntry};
pub use des::run_des;
pub use detector::{Detector, RestartReason, ScanResult};
pub use error::{EngineError, Result};
pub use lme::{LockManager, LockTable};
pub use metrics::{EventLog, RunMetrics, StepOutcome, StopReason};
pub use oracle::OracleMirror;
pub use threaded::run_threaded;
