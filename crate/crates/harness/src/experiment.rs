//! Repeated, seeded runs of one configuration.

use std::io::Write;

use kvstab_core::{GlobalState, ProtocolInstance, ProtocolKind};
use kvstab_engine::{run_des, run_threaded, EventLog, RunMetrics};
use serde::Serialize;
use tracing::info;

use crate::config::{ExperimentConfig, RunMode};
use crate::error::Result;
use crate::initial::gen_initial;
use crate::topology::{build_instance, topology_hash};
use crate::validator::check_maximal_matching;

/// Everything needed to regenerate a report.
#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub config: ExperimentConfig,
    pub nodes: usize,
    pub edges: usize,
    pub topology_hash: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RepetitionResult {
    pub repetition: u32,
    /// Seed of the engine run (scheduling, latencies, client orders).
    pub seed: u64,
    /// Seed the initial state was drawn with.
    pub initial_seed: u64,
    pub metrics: RunMetrics,
    /// Outcome of the independent maximality check; matching only.
    pub oracle_flaw: Option<String>,
    pub oracle_checked: bool,
}

impl RepetitionResult {
    pub fn oracle_passed(&self) -> bool {
        self.oracle_checked && self.oracle_flaw.is_none()
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Summary {
    pub runs: usize,
    pub converged_runs: usize,
    /// Over converged runs.
    pub mean_convergence_time_s: Option<f64>,
    pub min_convergence_time_s: Option<f64>,
    pub max_convergence_time_s: Option<f64>,
    pub mean_cvf_stuttering: f64,
    pub mean_cvf_state_changing: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub provenance: Provenance,
    pub runs: Vec<RepetitionResult>,
    pub summary: Summary,
    /// Some repetition hit the time limit before converging.
    pub partial: bool,
}

impl ExperimentReport {
    pub fn config(&self) -> &ExperimentConfig {
        &self.provenance.config
    }

    pub fn mean_convergence_time_s(&self) -> Option<f64> {
        self.summary.mean_convergence_time_s
    }
}

/// `baseline mean / variant mean`; above 1 when the variant is faster.
pub fn speedup(baseline: &ExperimentReport, variant: &ExperimentReport) -> Option<f64> {
    let b = baseline.mean_convergence_time_s()?;
    let v = variant.mean_convergence_time_s()?;
    (v > 0.0).then(|| b / v)
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `(initial_seed, engine_seed)` for a repetition. They depend only on the
/// run seed and the repetition, so variants compared under the same seed
/// start from the same states.
pub fn repetition_seeds(seed: u64, repetition: u32) -> (u64, u64) {
    let base = mix(seed ^ mix(u64::from(repetition)));
    (mix(base ^ 1), mix(base ^ 2))
}

fn summarize(runs: &[RepetitionResult]) -> Summary {
    let times: Vec<f64> = runs.iter().filter_map(|r| r.metrics.convergence_time_s()).collect();
    let n = runs.len().max(1) as f64;
    let mean = |f: fn(&RunMetrics) -> u64| runs.iter().map(|r| f(&r.metrics) as f64).sum::<f64>() / n;
    Summary {
        runs: runs.len(),
        converged_runs: times.len(),
        mean_convergence_time_s: (!times.is_empty()).then(|| times.iter().sum::<f64>() / times.len() as f64),
        min_convergence_time_s: times.iter().copied().reduce(f64::min),
        max_convergence_time_s: times.iter().copied().reduce(f64::max),
        mean_cvf_stuttering: mean(|m| m.cvf_stuttering),
        mean_cvf_state_changing: mean(|m| m.cvf_state_changing),
    }
}

#[derive(Serialize)]
struct RepetitionHeader<'a> {
    r#type: &'static str,
    experiment_id: &'a str,
    variant: String,
    repetition: u32,
    seed: u64,
}

fn run_one(
    config: &ExperimentConfig,
    instance: &ProtocolInstance,
    repetition: u32,
    log: &mut Vec<u8>,
    keep_log: bool,
) -> Result<RepetitionResult> {
    let (initial_seed, seed) = repetition_seeds(config.seed, repetition);
    let initial: GlobalState = gen_initial(config.initial, instance, initial_seed)?;
    let engine = config.engine_config(seed);
    if keep_log {
        let header = RepetitionHeader {
            r#type: "repetition",
            experiment_id: &config.id,
            variant: config.variant_label(),
            repetition,
            seed,
        };
        serde_json::to_writer(&mut *log, &header)?;
        log.push(b'\n');
    }
    let metrics = {
        let mut sink = if keep_log { EventLog::new(Some(log as &mut dyn Write)) } else { EventLog::disabled() };
        match config.mode {
            RunMode::DiscreteEvent => run_des(instance, &initial, &engine, &mut sink)?,
            RunMode::Threaded => run_threaded(instance, &initial, &engine, &mut sink)?,
        }
    };
    let (oracle_checked, oracle_flaw) = match instance.kind {
        ProtocolKind::Matching if metrics.converged => {
            (true, check_maximal_matching(instance.topology(), &metrics.final_state).err().map(|f| f.to_string()))
        }
        _ => (false, None),
    };
    info!(
        id = %config.id,
        variant = %config.variant_label(),
        repetition,
        converged = metrics.converged,
        time_s = metrics.convergence_time_s().unwrap_or(f64::NAN),
        "repetition finished"
    );
    Ok(RepetitionResult { repetition, seed, initial_seed, metrics, oracle_flaw, oracle_checked })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_logged(config, None)
}

/// Runs every repetition and, if `events` is given, writes the step log of
/// each run after a header line naming the repetition.
pub fn run_experiment_logged(config: &ExperimentConfig, events: Option<&mut dyn Write>) -> Result<ExperimentReport> {
    config.validate()?;
    let instance = build_instance(config)?;
    let keep_log = events.is_some();
    let reps: Vec<u32> = (0..config.repetitions).collect();
    let outcomes: Vec<Result<(RepetitionResult, Vec<u8>)>> = if config.parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = reps
                .iter()
                .map(|&r| {
                    let instance = &instance;
                    scope.spawn(move || {
                        let mut log = Vec::new();
                        run_one(config, instance, r, &mut log, keep_log).map(|res| (res, log))
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("repetition thread panicked")).collect()
        })
    } else {
        reps.iter()
            .map(|&r| {
                let mut log = Vec::new();
                run_one(config, &instance, r, &mut log, keep_log).map(|res| (res, log))
            })
            .collect()
    };
    let mut runs = Vec::with_capacity(outcomes.len());
    let mut events = events;
    for outcome in outcomes {
        let (result, log) = outcome?;
        if let Some(out) = events.as_mut() {
            out.write_all(&log)?;
        }
        runs.push(result);
    }
    let topology = instance.topology();
    let provenance = Provenance {
        tool: format!("kvstab {}", env!("CARGO_PKG_VERSION")),
        config: config.clone(),
        nodes: topology.node_count(),
        edges: topology.edge_count(),
        topology_hash: topology_hash(topology),
    };
    let partial = runs.iter().any(|r| !r.metrics.converged);
    Ok(ExperimentReport { provenance, summary: summarize(&runs), runs, partial })
}
