//! The store in discrete-event mode.
//!
//! An operation fans out one message per reachable replica. Each message
//! draws a request and a response delay; the replica serves the request when
//! it arrives, and the operation completes when its quorum-th response is
//! back, provided that happens within the round timeout. Otherwise a new
//! round starts, up to the configured number of attempts. Late messages of an
//! abandoned round still reach their replicas.

use std::collections::BTreeMap;
use std::sync::Arc;

use kvstab_core::Value;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cluster::{ClusterState, Defaults, ReadResult, Request};
use crate::error::StoreError;
use crate::key::Key;
use crate::latency::LatencyModel;
use crate::quorum::QuorumConfig;
use crate::sim::{Scheduler, SimTime};
use crate::stats::StoreStats;
use crate::version::VersionedValue;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OpId(pub u64);

#[derive(Clone, Debug)]
pub enum StoreEvent {
    Arrive { op: OpId, round: u32, replica: usize, request: Arc<Request> },
    RoundEnd { op: OpId, round: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OpReply {
    Get(Vec<ReadResult>),
    Put,
    Ping,
}

#[derive(Clone, Debug)]
pub struct Completion {
    pub op: OpId,
    pub started: SimTime,
    pub finished: SimTime,
    pub result: Result<OpReply, StoreError>,
}

struct PendingOp {
    request: Arc<Request>,
    needed: usize,
    started: SimTime,
    round: u32,
    /// Replicas whose responses make the quorum this round; empty if the
    /// round times out.
    winners: Vec<usize>,
    on_time: usize,
    snapshots: Vec<Option<Vec<Vec<VersionedValue>>>>,
    arrived: Vec<bool>,
}

pub struct SimCluster {
    state: ClusterState,
    config: QuorumConfig,
    latency: LatencyModel,
    rng: ChaCha8Rng,
    next_op: u64,
    pending: BTreeMap<OpId, PendingOp>,
    stats: StoreStats,
}

impl SimCluster {
    pub fn new(config: QuorumConfig, latency: LatencyModel, defaults: Defaults, seed: u64) -> Self {
        SimCluster {
            state: ClusterState::new(config.n, defaults),
            config,
            latency,
            rng: ChaCha8Rng::seed_from_u64(seed),
            next_op: 0,
            pending: BTreeMap::new(),
            stats: StoreStats::default(),
        }
    }

    pub fn config(&self) -> &QuorumConfig {
        &self.config
    }

    pub fn latency(&self) -> &LatencyModel {
        &self.latency
    }

    pub fn state(&self) -> &ClusterState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut ClusterState {
        &mut self.state
    }

    pub fn stats(&self) -> &StoreStats {
        &self.stats
    }

    pub fn oracle_latest(&self, key: &Key) -> Value {
        self.state.oracle_latest(key)
    }

    pub fn in_flight(&self) -> usize {
        self.pending.len()
    }

    /// Reads `keys`, waiting for `quorum` responses (the configured `r` if
    /// `None`).
    pub fn get<E: From<StoreEvent>>(
        &mut self,
        sched: &mut Scheduler<E>,
        keys: Vec<Key>,
        quorum: Option<usize>,
    ) -> OpId {
        let needed = quorum.unwrap_or(self.config.r).clamp(1, self.config.n);
        self.start(sched, Request::Get(keys), needed)
    }

    pub fn put<E: From<StoreEvent>>(&mut self, sched: &mut Scheduler<E>, writes: Vec<(Key, VersionedValue)>) -> OpId {
        let w = self.config.w;
        self.start(sched, Request::Put(writes), w)
    }

    /// A write-quorum round trip that touches no data.
    pub fn ping<E: From<StoreEvent>>(&mut self, sched: &mut Scheduler<E>) -> OpId {
        let w = self.config.w;
        self.start(sched, Request::Ping, w)
    }

    fn start<E: From<StoreEvent>>(&mut self, sched: &mut Scheduler<E>, request: Request, needed: usize) -> OpId {
        let op = OpId(self.next_op);
        self.next_op += 1;
        let n = self.config.n;
        self.pending.insert(
            op,
            PendingOp {
                request: Arc::new(request),
                needed,
                started: sched.now(),
                round: 0,
                winners: Vec::new(),
                on_time: 0,
                snapshots: vec![None; n],
                arrived: vec![false; n],
            },
        );
        self.start_round(sched, op);
        op
    }

    fn start_round<E: From<StoreEvent>>(&mut self, sched: &mut Scheduler<E>, op: OpId) {
        let now = sched.now();
        let deadline = now + self.config.timeout_us();
        let pending = self.pending.get_mut(&op).expect("round of a pending op");
        pending.round += 1;
        pending.snapshots.iter_mut().for_each(|s| *s = None);
        pending.arrived.iter_mut().for_each(|a| *a = false);
        let round = pending.round;
        let mut responses = Vec::new();
        for replica in 0..self.config.n {
            if !self.state.is_reachable(replica) {
                continue;
            }
            let there = self.latency.sample(&mut self.rng);
            let back = self.latency.sample(&mut self.rng);
            sched.schedule_at(
                now + there,
                StoreEvent::Arrive { op, round, replica, request: pending.request.clone() }.into(),
            );
            responses.push((now + there + back, replica));
        }
        responses.sort_unstable();
        pending.on_time = responses.iter().filter(|(t, _)| *t <= deadline).count();
        if pending.on_time >= pending.needed {
            pending.winners = responses[..pending.needed].iter().map(|&(_, r)| r).collect();
            let end = responses[pending.needed - 1].0;
            sched.schedule_at(end, StoreEvent::RoundEnd { op, round }.into());
        } else {
            pending.winners.clear();
            sched.schedule_at(deadline, StoreEvent::RoundEnd { op, round }.into());
        }
    }

    /// Processes one store event; returns the operation it completed, if any.
    pub fn handle<E: From<StoreEvent>>(&mut self, sched: &mut Scheduler<E>, event: StoreEvent) -> Option<Completion> {
        let now = sched.now();
        match event {
            StoreEvent::Arrive { op, round, replica, request } => {
                if !self.state.is_reachable(replica) {
                    return None;
                }
                let snapshot = self.state.serve(replica, &request, now);
                if let Some(p) = self.pending.get_mut(&op) {
                    if p.round == round {
                        p.arrived[replica] = true;
                        p.snapshots[replica] = snapshot;
                    }
                }
                None
            }
            StoreEvent::RoundEnd { op, round } => {
                let p = self.pending.get(&op)?;
                if p.round != round {
                    return None;
                }
                let success = !p.winners.is_empty() && p.winners.iter().all(|&r| p.arrived[r]);
                if success {
                    let p = self.pending.remove(&op).expect("pending op");
                    Some(self.complete(op, p, now))
                } else if p.round < self.config.attempts {
                    self.stats.retries += 1;
                    self.start_round(sched, op);
                    None
                } else {
                    let p = self.pending.remove(&op).expect("pending op");
                    let stats = self.stats_for(&p.request);
                    stats.failures += 1;
                    Some(Completion {
                        op,
                        started: p.started,
                        finished: now,
                        result: Err(StoreError::QuorumFailure {
                            op: p.request.name(),
                            acks: p.on_time,
                            needed: p.needed,
                            attempts: p.round,
                        }),
                    })
                }
            }
        }
    }

    fn stats_for(&mut self, request: &Request) -> &mut crate::stats::OpStats {
        match request {
            Request::Get(_) => &mut self.stats.get,
            Request::Put(_) => &mut self.stats.put,
            Request::Ping => &mut self.stats.ping,
        }
    }

    fn complete(&mut self, op: OpId, p: PendingOp, now: SimTime) -> Completion {
        let latency = now - p.started;
        self.stats_for(&p.request).record(latency);
        let reply = match &*p.request {
            Request::Get(keys) => {
                let snaps: Vec<&Vec<Vec<VersionedValue>>> =
                    p.winners.iter().map(|&r| p.snapshots[r].as_ref().expect("winner answered a get")).collect();
                let results = self.state.combine_reads(keys, &snaps);
                self.stats.stale_reads +=
                    results.iter().filter(|r| r.value != self.state.oracle_latest(&r.key)).count() as u64;
                OpReply::Get(results)
            }
            Request::Put(_) => OpReply::Put,
            Request::Ping => OpReply::Ping,
        };
        Completion { op, started: p.started, finished: now, result: Ok(reply) }
    }

    /// Drives `sched` until `op` completes, handling every other store event
    /// on the way. Completions of other operations are discarded.
    pub fn run_until_complete(&mut self, sched: &mut Scheduler<StoreEvent>, op: OpId) -> Completion {
        while let Some((_, ev)) = sched.pop() {
            if let Some(c) = self.handle(sched, ev) {
                if c.op == op {
                    return c;
                }
            }
        }
        panic!("operation {op:?} never completed");
    }

    /// Drains all remaining events.
    pub fn settle(&mut self, sched: &mut Scheduler<StoreEvent>) {
        while let Some((_, ev)) = sched.pop() {
            self.handle(sched, ev);
        }
    }
}
