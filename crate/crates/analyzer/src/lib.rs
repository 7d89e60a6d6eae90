//! Exhaustive checks of stabilization properties on small instances.

pub mod adversary;
pub mod error;
pub mod mutants;
pub mod recovery;
pub mod report;
pub mod system;
pub mod verify;

pub use adversary::{cvf_transitions, AdvEdge, AdversaryKind, AdversaryModel};
pub use error::{AnalyzerError, Result};
pub use recovery::{max_recovery_by, max_recovery_steps, single_corruptions};
pub use report::Report;
pub use system::{build_transition_system, Edge, Label, TransitionSystem};
pub use verify::{
    minimal_k, verify_contained_k_active, verify_contained_k_active_strict, verify_k_active, verify_silent,
    verify_stabilization, CounterExample, Step, Verdict, Violation,
};
