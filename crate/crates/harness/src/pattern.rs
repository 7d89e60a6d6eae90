//! Matched-fraction time series.

use std::collections::BTreeMap;

use crate::config::{ExperimentConfig, ProtocolChoice};
use crate::error::{HarnessError, Result};
use crate::experiment::{run_experiment_logged, ExperimentReport};

/// Runs `config` with the matched fraction sampled every `interval_ms`.
pub fn convergence_pattern(config: &ExperimentConfig, interval_ms: f64) -> Result<ExperimentReport> {
    if config.protocol != ProtocolChoice::Matching {
        return Err(HarnessError::Config("convergence patterns are defined for matching".into()));
    }
    let config = ExperimentConfig { sample_interval_ms: Some(interval_ms), ..config.clone() };
    run_experiment_logged(&config, None)
}

/// Share of sample times present in both series at which `a` is at least
/// `b`. `None` when the series share no time.
pub fn dominance(a: &[(u64, f64)], b: &[(u64, f64)]) -> Option<f64> {
    let b: BTreeMap<u64, f64> = b.iter().copied().collect();
    let (mut shared, mut above) = (0usize, 0usize);
    for &(t, fa) in a {
        if let Some(&fb) = b.get(&t) {
            shared += 1;
            if fa >= fb {
                above += 1;
            }
        }
    }
    (shared > 0).then(|| above as f64 / shared as f64)
}
