//! Discrete-event execution: clients, the lock table, the detector and the
//! store share one seeded scheduler, so a run is a pure function of its
//! configuration and seed.

use std::collections::BTreeMap;

use kvstab_core::{GlobalState, NodeId, ProtocolInstance};
use kvstab_store::{
    Completion, Defaults, Key, OpId, OpReply, ReadResult, Scheduler, SimCluster, SimTime, StoreEvent, WriterId,
};
use tracing::debug;

use crate::client::{audit, decide, read_keys, Client, Decision};
use crate::config::{assign_static, EngineConfig, StopCondition};
use crate::cvf::CvfKind;
use crate::detector::{Detector, RestartReason, ScanResult};
use crate::error::Result;
use crate::lme::LockTable;
use crate::metrics::{EventLog, LogRecord, RunMetrics, StepOutcome, StopReason};
use crate::oracle::OracleMirror;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Agent {
    Client(usize),
    Detector,
}

#[derive(Debug)]
enum Event {
    Store(StoreEvent),
    Wake(Agent),
    Sample,
    TimeLimit,
}

impl From<StoreEvent> for Event {
    fn from(e: StoreEvent) -> Self {
        Event::Store(e)
    }
}

/// Where a client is within its current step.
#[derive(Debug)]
enum Phase {
    Idle,
    /// Holding `locks[..held]`; waiting for the ping of `locks[held - 1]`
    /// or for `locks[held]` to be handed over.
    Locking {
        node: NodeId,
        locks: Vec<NodeId>,
        held: usize,
        wait_since: Option<SimTime>,
    },
    Reading {
        node: NodeId,
        locks: Vec<NodeId>,
    },
    Writing {
        node: NodeId,
        locks: Vec<NodeId>,
        rule: String,
        cvf: Option<CvfKind>,
    },
    Unlocking {
        locks: Vec<NodeId>,
    },
}

struct ClientSlot {
    client: Client,
    phase: Phase,
    /// Outcome of the step being wrapped up, reported when locks are gone.
    pending: Option<(NodeId, StepOutcome, Option<CvfKind>)>,
}

/// Installs `initial` and runs the protocol until the stop condition or the
/// time limit.
pub fn run_des(
    instance: &ProtocolInstance,
    initial: &GlobalState,
    config: &EngineConfig,
    log: &mut EventLog<'_>,
) -> Result<RunMetrics> {
    config.validate(instance.spec.node_count())?;
    let mut sim = DesRun::new(instance, initial, config);
    sim.run(log)?;
    Ok(sim.finish())
}

struct DesRun<'a> {
    instance: &'a ProtocolInstance,
    config: &'a EngineConfig,
    sched: Scheduler<Event>,
    store: SimCluster,
    clients: Vec<ClientSlot>,
    locks: LockTable,
    detector: Option<Detector>,
    ops: BTreeMap<OpId, Agent>,
    mirror: OracleMirror,
    metrics: RunMetrics,
    stop: Option<StopReason>,
    scan_started: SimTime,
}

impl<'a> DesRun<'a> {
    fn new(instance: &'a ProtocolInstance, initial: &GlobalState, config: &'a EngineConfig) -> Self {
        let spec = &instance.spec;
        let defaults = Defaults::new(spec.vars().iter().map(|v| v.default).collect());
        let mut store = SimCluster::new(config.quorum, config.latency, defaults, config.seed);
        let vpn = spec.vars_per_node();
        let writes =
            spec.topology().nodes().flat_map(|j| (0..vpn).map(move |slot| (Key::var(j, slot), initial.get(j, slot))));
        store.state_mut().initialize(writes, WriterId(0), 0);
        store.state_mut().track_changes(true);
        let clients = assign_static(spec.node_count(), config.clients, config.seed)
            .into_iter()
            .map(|c| ClientSlot { client: Client::new(c), phase: Phase::Idle, pending: None })
            .collect();
        let detector = config.detector.map(|d| Detector::new(instance.clone(), d.batch));
        let mirror = OracleMirror::new(instance.clone(), initial.clone(), 0);
        let metrics = RunMetrics {
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
        DesRun {
            instance,
            config,
            sched: Scheduler::new(),
            store,
            clients,
            locks: LockTable::new(),
            detector,
            ops: BTreeMap::new(),
            mirror,
            metrics,
            stop: None,
            scan_started: 0,
        }
    }

    fn run(&mut self, log: &mut EventLog<'_>) -> Result<()> {
        if self.config.stop == StopCondition::Invariant && self.mirror.invariant_holds() {
            self.stop = Some(StopReason::Invariant);
            return Ok(());
        }
        for c in 0..self.clients.len() {
            self.sched.schedule_at(0, Event::Wake(Agent::Client(c)));
        }
        if self.detector.is_some() {
            self.sched.schedule_at(0, Event::Wake(Agent::Detector));
        }
        if self.config.sample_interval_us.is_some() {
            self.sched.schedule_at(0, Event::Sample);
        }
        self.sched.schedule_at(self.config.max_time_us, Event::TimeLimit);
        while self.stop.is_none() {
            let Some((_, event)) = self.sched.pop() else { break };
            match event {
                Event::Store(ev) => {
                    let done = self.store.handle(&mut self.sched, ev);
                    self.sync_oracle();
                    if let Some(c) = done {
                        self.on_completion(c, log)?;
                    }
                }
                Event::Wake(Agent::Client(c)) => self.start_step(c),
                Event::Wake(Agent::Detector) => self.detector_read(),
                Event::Sample => {
                    if let Some(f) = self.mirror.matched_fraction() {
                        self.metrics.matched_series.push((self.sched.now(), f));
                    }
                    let every = self.config.sample_interval_us.expect("sampling enabled");
                    self.sched.schedule_in(every, Event::Sample);
                }
                Event::TimeLimit => self.stop = Some(StopReason::TimeLimit),
            }
        }
        Ok(())
    }

    fn finish(mut self) -> RunMetrics {
        let now = self.sched.now();
        let m = &mut self.metrics;
        m.end_time_us = now;
        m.stop_reason = self.stop.unwrap_or(StopReason::TimeLimit);
        m.converged = self.mirror.invariant_holds();
        m.convergence_time_us = if m.converged { self.mirror.entered_at() } else { None };
        m.store = self.store.stats().clone();
        m.detector_scans = self.detector.as_ref().map_or(0, Detector::scans);
        if let Some(f) = self.mirror.matched_fraction() {
            if m.matched_series.last().map(|&(t, _)| t) != Some(now) && self.config.sample_interval_us.is_some() {
                m.matched_series.push((now, f));
            }
        }
        m.final_state = self.mirror.state().clone();
        m.last_change_us = self.mirror.last_change();
        debug_assert!(self.mirror.invariant_holds() == self.mirror.recomputed_holds());
        self.metrics
    }

    fn sync_oracle(&mut self) {
        for change in self.store.state_mut().drain_changes() {
            self.mirror.apply(&change.key, change.value, change.time);
        }
        if self.config.stop == StopCondition::Invariant && self.mirror.invariant_holds() {
            self.stop = Some(StopReason::Invariant);
        }
    }

    fn start_step(&mut self, c: usize) {
        let slot = &mut self.clients[c];
        debug_assert!(matches!(slot.phase, Phase::Idle));
        let node = slot.client.next_node();
        if self.config.lme {
            let locks = self.instance.topology().closed_neighborhood(node).expect("node exists").to_vec();
            slot.phase = Phase::Locking { node, locks, held: 0, wait_since: None };
            self.request_next_lock(c);
        } else {
            slot.phase = Phase::Reading { node, locks: Vec::new() };
            self.issue_read(c, node);
        }
    }

    /// Takes the next lock of the current step, or starts the read when all
    /// are held. A granted lock is paid for with a write-quorum round trip.
    fn request_next_lock(&mut self, c: usize) {
        let now = self.sched.now();
        let Phase::Locking { node, locks, held, wait_since } = &mut self.clients[c].phase else {
            unreachable!("client {c} is not locking")
        };
        if *held == locks.len() {
            let (node, locks) = (*node, std::mem::take(locks));
            self.clients[c].phase = Phase::Reading { node, locks };
            self.issue_read(c, node);
            return;
        }
        if self.locks.acquire(locks[*held], c) {
            *held += 1;
            let op = self.store.ping(&mut self.sched);
            self.ops.insert(op, Agent::Client(c));
        } else {
            *wait_since = Some(now);
        }
    }

    /// Called when a queued lock was handed to `c`.
    fn lock_granted(&mut self, c: usize) {
        let now = self.sched.now();
        let Phase::Locking { held, wait_since, .. } = &mut self.clients[c].phase else {
            unreachable!("lock handed to client {c} outside locking")
        };
        *held += 1;
        if let Some(t) = wait_since.take() {
            self.metrics.lock_wait_us += now - t;
        }
        let op = self.store.ping(&mut self.sched);
        self.ops.insert(op, Agent::Client(c));
    }

    fn issue_read(&mut self, c: usize, node: NodeId) {
        let keys = read_keys(&self.instance.spec, node);
        let op = self.store.get(&mut self.sched, keys, None);
        self.ops.insert(op, Agent::Client(c));
    }

    fn on_completion(&mut self, done: Completion, log: &mut EventLog<'_>) -> Result<()> {
        let agent = self.ops.remove(&done.op).expect("completion of a tracked op");
        match agent {
            Agent::Client(c) => self.client_completion(c, done, log),
            Agent::Detector => self.detector_completion(done, log),
        }
    }

    fn client_completion(&mut self, c: usize, done: Completion, log: &mut EventLog<'_>) -> Result<()> {
        let now = self.sched.now();
        let phase = std::mem::replace(&mut self.clients[c].phase, Phase::Idle);
        match (phase, done.result) {
            (Phase::Locking { node, locks, held, wait_since }, Ok(_)) => {
                self.clients[c].phase = Phase::Locking { node, locks, held, wait_since };
                self.request_next_lock(c);
            }
            (Phase::Locking { node, locks, held, .. }, Err(e)) => {
                self.quorum_error(c, node, locks[..held].to_vec(), e.to_string(), log)?;
            }
            (Phase::Reading { node, locks }, Ok(OpReply::Get(reads))) => {
                self.on_read(c, node, locks, reads, log)?;
            }
            (Phase::Reading { node, locks }, Err(e)) => {
                self.quorum_error(c, node, locks, e.to_string(), log)?;
            }
            (Phase::Writing { node, locks, rule, cvf }, Ok(_)) => {
                self.metrics.executed += 1;
                self.end_step(c, node, locks, StepOutcome::Executed { rule }, cvf, log)?;
            }
            (Phase::Writing { node, locks, cvf, .. }, Err(e)) => {
                self.metrics.quorum_errors += 1;
                self.end_step(c, node, locks, StepOutcome::QuorumError { op: e.to_string() }, cvf, log)?;
            }
            (Phase::Unlocking { locks }, _) => {
                // Release ping done (or failed: the locks go either way).
                for &n in &locks {
                    if let Some(next) = self.locks.release(n, c) {
                        self.lock_granted(next);
                    }
                }
                let (node, outcome, cvf) = self.clients[c].pending.take().expect("step outcome");
                self.report_step(c, node, &outcome, cvf, now, log)?;
                self.sched.schedule_in(self.config.think_us, Event::Wake(Agent::Client(c)));
            }
            (phase, result) => unreachable!("client {c} in {phase:?} got {result:?}"),
        }
        Ok(())
    }

    fn on_read(
        &mut self,
        c: usize,
        node: NodeId,
        locks: Vec<NodeId>,
        reads: Vec<ReadResult>,
        log: &mut EventLog<'_>,
    ) -> Result<()> {
        let now = self.sched.now();
        let decision: Decision = decide(&self.instance.spec, node, &reads);
        let mirror = &self.mirror;
        let event = audit(&self.instance.spec, &decision, c, now, |n, s| mirror.get(n, s));
        let cvf = event.as_ref().map(|e| e.kind);
        if let Some(e) = event {
            self.metrics.count_cvf(e.kind);
            if self.metrics.cvf_events.len() < self.config.keep_cvf_events {
                self.metrics.cvf_events.push(e);
            }
        }
        match &decision.action {
            Some((rule, _)) => {
                let writes = self.clients[c].client.writes_for(&decision, &reads, now);
                let op = self.store.put(&mut self.sched, writes);
                self.ops.insert(op, Agent::Client(c));
                self.clients[c].phase = Phase::Writing { node, locks, rule: rule.clone(), cvf };
                Ok(())
            }
            None => self.end_step(c, node, locks, StepOutcome::NoAction, cvf, log),
        }
    }

    fn quorum_error(
        &mut self,
        c: usize,
        node: NodeId,
        locks: Vec<NodeId>,
        op: String,
        log: &mut EventLog<'_>,
    ) -> Result<()> {
        self.metrics.quorum_errors += 1;
        self.end_step(c, node, locks, StepOutcome::QuorumError { op }, None, log)
    }

    fn end_step(
        &mut self,
        c: usize,
        node: NodeId,
        locks: Vec<NodeId>,
        outcome: StepOutcome,
        cvf: Option<CvfKind>,
        log: &mut EventLog<'_>,
    ) -> Result<()> {
        if locks.is_empty() {
            self.clients[c].phase = Phase::Idle;
            self.report_step(c, node, &outcome, cvf, self.sched.now(), log)?;
            self.sched.schedule_in(self.config.think_us, Event::Wake(Agent::Client(c)));
        } else {
            self.clients[c].pending = Some((node, outcome, cvf));
            self.clients[c].phase = Phase::Unlocking { locks };
            let op = self.store.ping(&mut self.sched);
            self.ops.insert(op, Agent::Client(c));
        }
        Ok(())
    }

    fn report_step(
        &mut self,
        c: usize,
        node: NodeId,
        outcome: &StepOutcome,
        cvf: Option<CvfKind>,
        now: SimTime,
        log: &mut EventLog<'_>,
    ) -> Result<()> {
        self.metrics.steps += 1;
        log.write(&LogRecord::Step { time_us: now, client: c, node: node.0, outcome, cvf })?;
        Ok(())
    }

    fn detector_read(&mut self) {
        let detector = self.detector.as_ref().expect("detector configured");
        if detector.at_scan_start() {
            self.scan_started = self.sched.now();
        }
        let keys = detector.next_keys();
        let n = self.config.quorum.n;
        let op = self.store.get(&mut self.sched, keys, Some(n));
        self.ops.insert(op, Agent::Detector);
    }

    fn detector_completion(&mut self, done: Completion, log: &mut EventLog<'_>) -> Result<()> {
        let now = self.sched.now();
        let detector = self.detector.as_mut().expect("detector configured");
        let verdict = match done.result {
            Ok(OpReply::Get(reads)) => detector.on_batch(&reads),
            Ok(other) => unreachable!("detector read returned {other:?}"),
            Err(_) => Some(detector.on_error()),
        };
        let Some(verdict) = verdict else {
            self.sched.schedule_in(0, Event::Wake(Agent::Detector));
            return Ok(());
        };
        let scan = detector.scans();
        if !matches!(verdict, ScanResult::Restarted(RestartReason::QuorumError)) {
            self.metrics.scan_times.push((self.scan_started, now));
        }
        let text = match &verdict {
            ScanResult::Terminated => "terminated".to_string(),
            ScanResult::Restarted(r) => format!("{r:?}"),
        };
        log.write(&LogRecord::Detector { time_us: now, scan, result: &text })?;
        debug!(scan, now, result = %text, "detector scan");
        if verdict == ScanResult::Terminated {
            self.metrics.detector_terminated_at_us = Some(now);
            if self.config.stop == StopCondition::Detector {
                self.stop = Some(StopReason::Detector);
            }
            return Ok(());
        }
        let pause = self.config.detector.expect("detector configured").pause_us;
        self.sched.schedule_in(pause, Event::Wake(Agent::Detector));
        Ok(())
    }
}
