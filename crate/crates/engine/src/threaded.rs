//! Threaded execution: one OS thread per client plus a detector thread,
//! against a store whose messages are delayed in real time. Times are wall
//! microseconds since the run started.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use kvstab_core::{GlobalState, ProtocolInstance};
use kvstab_store::{Defaults, Key, StoreError, ThreadedCluster, WriterId};
use tracing::debug;

use crate::client::{audit, decide, read_keys, Client};
use crate::config::{assign_static, EngineConfig, StopCondition};
use crate::cvf::{CvfEvent, CvfKind};
use crate::detector::{Detector, RestartReason, ScanResult};
use crate::error::Result;
use crate::lme::LockManager;
use crate::metrics::{EventLog, LogRecord, RunMetrics, StepOutcome, StopReason};
use crate::oracle::OracleMirror;

enum Report {
    Step { time_us: u64, client: usize, node: u32, outcome: StepOutcome, cvf: Option<CvfEvent>, lock_wait_us: u64 },
    Scan { started_us: u64, time_us: u64, scan: u64, result: ScanResult },
}

fn client_loop(
    mut client: Client,
    instance: &ProtocolInstance,
    cluster: &ThreadedCluster,
    locks: &LockManager,
    config: &EngineConfig,
    stop: &AtomicBool,
    tx: &mpsc::Sender<Report>,
) {
    let spec = &instance.spec;
    while !stop.load(Ordering::Relaxed) {
        if config.think_us > 0 {
            thread::sleep(Duration::from_micros(config.think_us));
        }
        let node = client.next_node();
        let mut held = Vec::new();
        let mut lock_wait_us = 0;
        let step = (|| -> std::result::Result<(StepOutcome, Option<CvfEvent>), StoreError> {
            if config.lme {
                let hood = spec.topology().closed_neighborhood(node).expect("node exists").to_vec();
                lock_wait_us = locks.acquire_all(&hood, client.id).as_micros() as u64;
                held = hood;
                for _ in &held {
                    cluster.ping()?;
                }
            }
            let reads = cluster.get(read_keys(spec, node), None)?;
            let decision = decide(spec, node, &reads);
            let now = cluster.now_us();
            let event = {
                let state = cluster.state();
                audit(spec, &decision, client.id, now, |n, s| state.oracle_latest(&Key::var(n, s)))
            };
            match &decision.action {
                Some((rule, _)) => {
                    let writes = client.writes_for(&decision, &reads, now);
                    cluster.put(writes)?;
                    Ok((StepOutcome::Executed { rule: rule.clone() }, event))
                }
                None => Ok((StepOutcome::NoAction, event)),
            }
        })();
        let (outcome, cvf) = step.unwrap_or_else(|e| (StepOutcome::QuorumError { op: e.to_string() }, None));
        if !held.is_empty() {
            // The release costs a round trip; the locks go either way.
            let _ = cluster.ping();
            locks.release_all(&held, client.id);
        }
        let report =
            Report::Step { time_us: cluster.now_us(), client: client.id, node: node.0, outcome, cvf, lock_wait_us };
        if tx.send(report).is_err() {
            return;
        }
    }
}

fn detector_loop(
    mut detector: Detector,
    cluster: &ThreadedCluster,
    pause: Duration,
    stop: &AtomicBool,
    tx: &mpsc::Sender<Report>,
) {
    let n = cluster.config().n;
    let mut started_us = 0;
    while !stop.load(Ordering::Relaxed) {
        if detector.at_scan_start() {
            started_us = cluster.now_us();
        }
        let verdict = match cluster.get(detector.next_keys(), Some(n)) {
            Ok(reads) => detector.on_batch(&reads),
            Err(_) => Some(detector.on_error()),
        };
        let Some(result) = verdict else { continue };
        let terminated = result == ScanResult::Terminated;
        let report = Report::Scan { started_us, time_us: cluster.now_us(), scan: detector.scans(), result };
        if tx.send(report).is_err() || terminated {
            return;
        }
        thread::sleep(pause);
    }
}

/// Threaded counterpart of [`run_des`](crate::run_des). Convergence time is
/// wall-clock and runs are not reproducible.
pub fn run_threaded(
    instance: &ProtocolInstance,
    initial: &GlobalState,
    config: &EngineConfig,
    log: &mut EventLog<'_>,
) -> Result<RunMetrics> {
    let spec = &instance.spec;
    config.validate(spec.node_count())?;
    let defaults = Defaults::new(spec.vars().iter().map(|v| v.default).collect());
    let cluster = ThreadedCluster::new(config.quorum, config.latency, defaults, config.seed);
    {
        let mut state = cluster.state();
        let vpn = spec.vars_per_node();
        let writes =
            spec.topology().nodes().flat_map(|j| (0..vpn).map(move |slot| (Key::var(j, slot), initial.get(j, slot))));
        state.initialize(writes, WriterId(0), 0);
        state.track_changes(true);
    }
    let mut mirror = OracleMirror::new(instance.clone(), initial.clone(), 0);
    let locks = LockManager::new();
    let stop = AtomicBool::new(false);
    let (tx, rx) = mpsc::channel();
    let mut metrics = RunMetrics {
        converged: false,
        convergence_time_us: None,
        end_time_us: 0,
        stop_reason: StopReason::TimeLimit,
        detector_terminated_at_us: None,
        detector_scans: 0,
        scan_times: Vec::new(),
        last_change_us: 0,
        steps: 0,
        executed: 0,
        quorum_errors: 0,
        cvf_stuttering: 0,
        cvf_state_changing: 0,
        lock_wait_us: 0,
        store: Default::default(),
        matched_series: Vec::new(),
        cvf_events: Vec::new(),
        final_state: initial.clone(),
    };
    let instance_arc = Arc::new(instance.clone());
    let mut next_sample = 0u64;
    let outcome: Result<()> = thread::scope(|scope| {
        for c in assign_static(spec.node_count(), config.clients, config.seed) {
            let tx = tx.clone();
            let (cluster, locks, stop, inst) = (&cluster, &locks, &stop, instance_arc.clone());
            scope.spawn(move || client_loop(Client::new(c), &inst, cluster, locks, config, stop, &tx));
        }
        if let Some(d) = config.detector {
            let tx = tx.clone();
            let detector = Detector::new(instance.clone(), d.batch);
            let (cluster, stop) = (&cluster, &stop);
            scope.spawn(move || detector_loop(detector, cluster, Duration::from_micros(d.pause_us), stop, &tx));
        }
        drop(tx);
        let result = (|| -> Result<()> {
            loop {
                for change in cluster.state().drain_changes() {
                    mirror.apply(&change.key, change.value, change.time);
                }
                let now = cluster.now_us();
                if let Some(every) = config.sample_interval_us {
                    if now >= next_sample {
                        if let Some(f) = mirror.matched_fraction() {
                            metrics.matched_series.push((now, f));
                        }
                        next_sample = now + every;
                    }
                }
                if config.stop == StopCondition::Invariant && mirror.invariant_holds() {
                    metrics.stop_reason = StopReason::Invariant;
                    return Ok(());
                }
                if now >= config.max_time_us {
                    metrics.stop_reason = StopReason::TimeLimit;
                    return Ok(());
                }
                match rx.recv_timeout(Duration::from_millis(1)) {
                    Ok(Report::Step { time_us, client, node, outcome, cvf, lock_wait_us }) => {
                        metrics.steps += 1;
                        metrics.lock_wait_us += lock_wait_us;
                        match &outcome {
                            StepOutcome::Executed { .. } => metrics.executed += 1,
                            StepOutcome::QuorumError { .. } => metrics.quorum_errors += 1,
                            StepOutcome::NoAction => {}
                        }
                        let kind: Option<CvfKind> = cvf.as_ref().map(|e| e.kind);
                        if let Some(e) = cvf {
                            metrics.count_cvf(e.kind);
                            if metrics.cvf_events.len() < config.keep_cvf_events {
                                metrics.cvf_events.push(e);
                            }
                        }
                        log.write(&LogRecord::Step { time_us, client, node, outcome: &outcome, cvf: kind })?;
                    }
                    Ok(Report::Scan { started_us, time_us, scan, result }) => {
                        if result != ScanResult::Restarted(RestartReason::QuorumError) {
                            metrics.scan_times.push((started_us, time_us));
                        }
                        let text = match &result {
                            ScanResult::Terminated => "terminated".to_string(),
                            ScanResult::Restarted(r) => format!("{r:?}"),
                        };
                        log.write(&LogRecord::Detector { time_us, scan, result: &text })?;
                        debug!(scan, time_us, result = %text, "detector scan");
                        metrics.detector_scans = scan;
                        if result == ScanResult::Terminated {
                            metrics.detector_terminated_at_us = Some(time_us);
                            if config.stop == StopCondition::Detector {
                                metrics.stop_reason = StopReason::Detector;
                                return Ok(());
                            }
                        }
                    }
                    Err(mpsc::RecvTimeoutError::Timeout) => {}
                    Err(mpsc::RecvTimeoutError::Disconnected) => return Ok(()),
                }
            }
        })();
        stop.store(true, Ordering::Relaxed);
        // Let clients blocked on the channel see the stop flag.
        while rx.recv_timeout(Duration::from_millis(50)).is_ok() {}
        result
    });
    outcome?;
    for change in cluster.state().drain_changes() {
        mirror.apply(&change.key, change.value, change.time);
    }
    metrics.end_time_us = cluster.now_us();
    metrics.converged = mirror.invariant_holds();
    metrics.convergence_time_us = if metrics.converged { mirror.entered_at() } else { None };
    metrics.store = cluster.stats();
    metrics.final_state = mirror.state().clone();
    metrics.last_change_us = mirror.last_change();
    Ok(metrics)
}
