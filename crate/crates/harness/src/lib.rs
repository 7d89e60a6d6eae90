//! Experiment orchestration: configurations, initial states, repeated
//! seeded runs, sweeps, convergence patterns and exhaustive verification.

pub mod config;
pub mod error;
pub mod experiment;
pub mod initial;
pub mod output;
pub mod pattern;
pub mod sweep;
pub mod topology;
pub mod validator;
pub mod verify;

pub use config::{ExperimentConfig, Generator, InitialMode, ProtocolChoice, RunMode, TopologyConfig};
pub use error::{HarnessError, Result};
pub use experiment::{
    repetition_seeds, run_experiment, run_experiment_logged, speedup, ExperimentReport, Provenance, RepetitionResult,
    Summary,
};
pub use initial::{gen_initial, legitimate_state, perturb, random_state};
pub use output::{write_pattern_csv, write_report_csv, write_report_json, REPORT_COLUMNS};
pub use pattern::{convergence_pattern, dominance};
pub use sweep::{sweep, with_value, Dimension};
pub use topology::{build_instance, build_topology, edge_list, topology_hash};
pub use validator::{check_maximal_matching, MatchingFlaw};
pub use verify::{render, verify_instance, RecoveryBounds, VerifySummary};
