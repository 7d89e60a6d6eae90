//! The store in threaded wall-clock mode. Calls block the calling thread;
//! message delays are realized by a dispatcher thread that runs deliveries
//! at their due instants.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::atomic::{AtomicBool, Ordering as AtomicOrdering};
use std::sync::mpsc;
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use kvstab_core::Value;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cluster::{ClusterState, Defaults, ReadResult, Request};
use crate::error::{Result, StoreError};
use crate::key::Key;
use crate::latency::LatencyModel;
use crate::quorum::QuorumConfig;
use crate::stats::StoreStats;
use crate::version::VersionedValue;

type Job = Box<dyn FnOnce() + Send>;

struct Timed {
    due: Instant,
    seq: u64,
    job: Job,
}

impl PartialEq for Timed {
    fn eq(&self, other: &Self) -> bool {
        (self.due, self.seq) == (other.due, other.seq)
    }
}
impl Eq for Timed {}
impl PartialOrd for Timed {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Timed {
    fn cmp(&self, other: &Self) -> Ordering {
        (other.due, other.seq).cmp(&(self.due, self.seq))
    }
}

#[derive(Default)]
struct Queue {
    heap: BinaryHeap<Timed>,
    seq: u64,
}

struct DispatchShared {
    queue: Mutex<Queue>,
    wake: Condvar,
    stop: AtomicBool,
}

/// Handle for scheduling delayed jobs on the dispatcher thread.
#[derive(Clone)]
struct DispatchHandle(Arc<DispatchShared>);

impl DispatchHandle {
    fn schedule(&self, due: Instant, job: Job) {
        let mut q = self.0.queue.lock().expect("dispatcher queue poisoned");
        let seq = q.seq;
        q.seq += 1;
        q.heap.push(Timed { due, seq, job });
        drop(q);
        self.0.wake.notify_one();
    }
}

struct Dispatcher {
    handle: DispatchHandle,
    thread: Option<JoinHandle<()>>,
}

impl Dispatcher {
    fn start() -> Self {
        let shared = Arc::new(DispatchShared {
            queue: Mutex::new(Queue::default()),
            wake: Condvar::new(),
            stop: AtomicBool::new(false),
        });
        let worker = shared.clone();
        let thread = thread::Builder::new()
            .name("store-dispatch".into())
            .spawn(move || dispatch_loop(&worker))
            .expect("spawn dispatcher thread");
        Dispatcher { handle: DispatchHandle(shared), thread: Some(thread) }
    }
}

fn dispatch_loop(shared: &DispatchShared) {
    let mut q = shared.queue.lock().expect("dispatcher queue poisoned");
    loop {
        if shared.stop.load(AtomicOrdering::Acquire) {
            return;
        }
        let now = Instant::now();
        match q.heap.peek().map(|t| t.due) {
            Some(due) if due <= now => {
                let timed = q.heap.pop().expect("peeked entry");
                drop(q);
                (timed.job)();
                q = shared.queue.lock().expect("dispatcher queue poisoned");
            }
            Some(due) => {
                q = shared.wake.wait_timeout(q, due - now).expect("dispatcher queue poisoned").0;
            }
            None => {
                q = shared.wake.wait(q).expect("dispatcher queue poisoned");
            }
        }
    }
}

impl Drop for Dispatcher {
    fn drop(&mut self) {
        self.handle.0.stop.store(true, AtomicOrdering::Release);
        self.handle.0.wake.notify_all();
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
        // Queued jobs may hold handles to the queue itself.
        if let Ok(mut q) = self.handle.0.queue.lock() {
            q.heap.clear();
        }
    }
}

/// Thread-safe store front end with real delays.
pub struct ThreadedCluster {
    state: Arc<Mutex<ClusterState>>,
    config: QuorumConfig,
    latency: LatencyModel,
    rng: Mutex<ChaCha8Rng>,
    stats: Mutex<StoreStats>,
    epoch: Instant,
    dispatcher: Dispatcher,
}

type Snapshot = Option<Vec<Vec<VersionedValue>>>;

impl ThreadedCluster {
    pub fn new(config: QuorumConfig, latency: LatencyModel, defaults: Defaults, seed: u64) -> Self {
        ThreadedCluster {
            state: Arc::new(Mutex::new(ClusterState::new(config.n, defaults))),
            config,
            latency,
            rng: Mutex::new(ChaCha8Rng::seed_from_u64(seed)),
            stats: Mutex::new(StoreStats::default()),
            epoch: Instant::now(),
            dispatcher: Dispatcher::start(),
        }
    }

    pub fn config(&self) -> &QuorumConfig {
        &self.config
    }

    /// Microseconds since the cluster was created; the store's wall clock.
    pub fn now_us(&self) -> u64 {
        self.epoch.elapsed().as_micros() as u64
    }

    pub fn epoch(&self) -> Instant {
        self.epoch
    }

    pub fn state(&self) -> MutexGuard<'_, ClusterState> {
        self.state.lock().expect("cluster state poisoned")
    }

    pub fn stats(&self) -> StoreStats {
        self.stats.lock().expect("stats poisoned").clone()
    }

    pub fn oracle_latest(&self, key: &Key) -> Value {
        self.state().oracle_latest(key)
    }

    pub fn get(&self, keys: Vec<Key>, quorum: Option<usize>) -> Result<Vec<ReadResult>> {
        let needed = quorum.unwrap_or(self.config.r).clamp(1, self.config.n);
        let request = Arc::new(Request::Get(keys.clone()));
        let started = Instant::now();
        let snaps = self.execute(&request, needed)?;
        let state = self.state();
        let refs: Vec<&Vec<Vec<VersionedValue>>> = snaps.iter().map(|s| s.as_ref().expect("get snapshot")).collect();
        let results = state.combine_reads(&keys, &refs);
        let stale = results.iter().filter(|r| r.value != state.oracle_latest(&r.key)).count();
        drop(state);
        let mut stats = self.stats.lock().expect("stats poisoned");
        stats.get.record(started.elapsed().as_micros() as u64);
        stats.stale_reads += stale as u64;
        Ok(results)
    }

    pub fn put(&self, writes: Vec<(Key, VersionedValue)>) -> Result<()> {
        let started = Instant::now();
        self.execute(&Arc::new(Request::Put(writes)), self.config.w)?;
        self.stats.lock().expect("stats poisoned").put.record(started.elapsed().as_micros() as u64);
        Ok(())
    }

    pub fn ping(&self) -> Result<()> {
        let started = Instant::now();
        self.execute(&Arc::new(Request::Ping), self.config.w)?;
        self.stats.lock().expect("stats poisoned").ping.record(started.elapsed().as_micros() as u64);
        Ok(())
    }

    fn execute(&self, request: &Arc<Request>, needed: usize) -> Result<Vec<Snapshot>> {
        let timeout = Duration::from_millis(self.config.timeout_ms);
        let mut acks = 0;
        for attempt in 1..=self.config.attempts {
            if attempt > 1 {
                self.stats.lock().expect("stats poisoned").retries += 1;
            }
            let (tx, rx) = mpsc::channel::<(usize, Snapshot)>();
            let start = Instant::now();
            for replica in 0..self.config.n {
                if !self.state().is_reachable(replica) {
                    continue;
                }
                let (there, back) = {
                    let mut rng = self.rng.lock().expect("rng poisoned");
                    (self.latency.sample(&mut *rng), self.latency.sample(&mut *rng))
                };
                let state = self.state.clone();
                let dispatch = self.dispatcher.handle.clone();
                let request = request.clone();
                let tx = tx.clone();
                let epoch = self.epoch;
                self.dispatcher.handle.schedule(
                    start + Duration::from_micros(there),
                    Box::new(move || {
                        let mut st = state.lock().expect("cluster state poisoned");
                        if !st.is_reachable(replica) {
                            return;
                        }
                        let now = epoch.elapsed().as_micros() as u64;
                        let snap = st.serve(replica, &request, now);
                        drop(st);
                        dispatch.schedule(
                            Instant::now() + Duration::from_micros(back),
                            Box::new(move || {
                                let _ = tx.send((replica, snap));
                            }),
                        );
                    }),
                );
            }
            drop(tx);
            let deadline = start + timeout;
            let mut got = Vec::new();
            while got.len() < needed {
                let left = deadline.saturating_duration_since(Instant::now());
                match rx.recv_timeout(left) {
                    Ok((_, snap)) => got.push(snap),
                    Err(_) => break,
                }
            }
            if got.len() >= needed {
                return Ok(got);
            }
            acks = got.len();
        }
        let mut stats = self.stats.lock().expect("stats poisoned");
        match **request {
            Request::Get(_) => stats.get.failures += 1,
            Request::Put(_) => stats.put.failures += 1,
            Request::Ping => stats.ping.failures += 1,
        }
        Err(StoreError::QuorumFailure { op: request.name(), acks, needed, attempts: self.config.attempts })
    }
}
