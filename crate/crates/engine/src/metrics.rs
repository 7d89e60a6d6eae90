use std::io::Write;

use kvstab_core::GlobalState;
use kvstab_store::StoreStats;
use serde::Serialize;

use crate::cvf::{CvfEvent, CvfKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Detector,
    Invariant,
    TimeLimit,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum StepOutcome {
    Executed { rule: String },
    NoAction,
    QuorumError { op: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunMetrics {
    /// Whether the store's converged state satisfies the invariant at the end.
    pub converged: bool,
    /// Time the converged state last entered the invariant.
    pub convergence_time_us: Option<u64>,
    pub end_time_us: u64,
    pub stop_reason: StopReason,
    pub detector_terminated_at_us: Option<u64>,
    pub detector_scans: u64,
    /// `(start_us, end_us)` of every completed detector scan.
    pub scan_times: Vec<(u64, u64)>,
    /// Time of the last change to the store's converged state.
    pub last_change_us: u64,
    pub steps: u64,
    pub executed: u64,
    pub quorum_errors: u64,
    pub cvf_stuttering: u64,
    pub cvf_state_changing: u64,
    pub lock_wait_us: u64,
    pub store: StoreStats,
    /// `(time_us, matched fraction)` samples.
    pub matched_series: Vec<(u64, f64)>,
    pub cvf_events: Vec<CvfEvent>,
    #[serde(skip)]
    pub final_state: GlobalState,
}

impl RunMetrics {
    pub fn convergence_time_s(&self) -> Option<f64> {
        self.convergence_time_us.map(|us| us as f64 / 1e6)
    }

    pub(crate) fn count_cvf(&mut self, kind: CvfKind) {
        match kind {
            CvfKind::Stuttering => self.cvf_stuttering += 1,
            CvfKind::StateChanging => self.cvf_state_changing += 1,
        }
    }
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub(crate) enum LogRecord<'a> {
    Step {
        time_us: u64,
        client: usize,
        node: u32,
        #[serde(flatten)]
        outcome: &'a StepOutcome,
        cvf: Option<CvfKind>,
    },
    Detector {
        time_us: u64,
        scan: u64,
        result: &'a str,
    },
}

/// Line-delimited JSON sink for step records.
pub struct EventLog<'w> {
    out: Option<&'w mut dyn Write>,
}

impl<'w> EventLog<'w> {
    pub fn new(out: Option<&'w mut dyn Write>) -> Self {
        EventLog { out }
    }

    pub fn disabled() -> Self {
        EventLog { out: None }
    }

    pub(crate) fn write(&mut self, record: &LogRecord<'_>) -> std::io::Result<()> {
        if let Some(out) = self.out.as_mut() {
            serde_json::to_writer(&mut **out, record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}
