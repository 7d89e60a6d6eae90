//! Replica state shared by the simulated and threaded front ends.

use std::collections::BTreeMap;
use std::sync::Arc;

use kvstab_core::Value;

use crate::clock::{VectorClock, WriterId};
use crate::key::Key;
use crate::version::{
    context_of, has_dominated_pair, insert_version, resolve, undominated, ResolutionPolicy, VersionedValue,
};

/// Values returned for keys that were never written: indexed by variable
/// slot for program variables, null for auxiliary keys.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Defaults {
    pub slots: Vec<Value>,
}

impl Defaults {
    pub fn new(slots: Vec<Value>) -> Self {
        Defaults { slots }
    }

    pub fn value_for(&self, key: &Key) -> Value {
        match key {
            Key::Var(v) => self.slots.get(v.slot as usize).copied().unwrap_or(Value::Null),
            Key::Aux(_) => Value::Null,
        }
    }
}

/// One replica: every key maps to its pairwise-concurrent versions.
#[derive(Clone, Debug, Default)]
pub struct ReplicaStore {
    data: BTreeMap<Key, Vec<VersionedValue>>,
}

impl ReplicaStore {
    pub fn versions(&self, key: &Key) -> &[VersionedValue] {
        self.data.get(key).map_or(&[], Vec::as_slice)
    }

    pub fn apply(&mut self, key: Key, version: VersionedValue) -> bool {
        let list = self.data.entry(key).or_default();
        let kept = insert_version(list, version);
        debug_assert!(!has_dominated_pair(list));
        kept
    }

    pub fn keys(&self) -> impl Iterator<Item = &Key> {
        self.data.keys()
    }

    pub fn has_dominated_pair(&self) -> bool {
        self.data.values().any(|vs| has_dominated_pair(vs))
    }
}

/// A request as delivered to one replica.
#[derive(Clone, Debug)]
pub enum Request {
    Get(Vec<Key>),
    Put(Vec<(Key, VersionedValue)>),
    Ping,
}

impl Request {
    pub fn name(&self) -> &'static str {
        match self {
            Request::Get(_) => "get",
            Request::Put(_) => "put",
            Request::Ping => "ping",
        }
    }
}

/// Per-key result of a quorum read.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReadResult {
    pub key: Key,
    pub value: Value,
    pub context: VectorClock,
    pub versions: Vec<VersionedValue>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleChange {
    pub time: u64,
    pub key: Key,
    pub value: Value,
}

#[derive(Clone, Debug)]
pub struct ClusterState {
    replicas: Vec<ReplicaStore>,
    reachable: Vec<bool>,
    oracle: BTreeMap<Key, Vec<VersionedValue>>,
    latest: BTreeMap<Key, Value>,
    defaults: Arc<Defaults>,
    policy: ResolutionPolicy,
    track_changes: bool,
    changes: Vec<OracleChange>,
}

impl ClusterState {
    pub fn new(n: usize, defaults: Defaults) -> Self {
        ClusterState {
            replicas: vec![ReplicaStore::default(); n],
            reachable: vec![true; n],
            oracle: BTreeMap::new(),
            latest: BTreeMap::new(),
            defaults: Arc::new(defaults),
            policy: ResolutionPolicy::LastWriteWins,
            track_changes: false,
            changes: Vec::new(),
        }
    }

    pub fn replica_count(&self) -> usize {
        self.replicas.len()
    }

    pub fn replica(&self, i: usize) -> &ReplicaStore {
        &self.replicas[i]
    }

    pub fn defaults(&self) -> &Defaults {
        &self.defaults
    }

    pub fn policy(&self) -> ResolutionPolicy {
        self.policy
    }

    pub fn set_reachable(&mut self, replica: usize, reachable: bool) {
        self.reachable[replica] = reachable;
    }

    pub fn is_reachable(&self, replica: usize) -> bool {
        self.reachable[replica]
    }

    /// Starts recording every change of an oracle value.
    pub fn track_changes(&mut self, on: bool) {
        self.track_changes = on;
    }

    pub fn drain_changes(&mut self) -> Vec<OracleChange> {
        std::mem::take(&mut self.changes)
    }

    /// Writes `value` to every replica at once with a fresh clock from
    /// `writer`, bypassing quorums. Used to install initial states.
    pub fn initialize<I>(&mut self, writes: I, writer: WriterId, now: u64)
    where
        I: IntoIterator<Item = (Key, Value)>,
    {
        for (key, value) in writes {
            let ctx = context_of(self.oracle_versions(&key));
            let version = VersionedValue::new(ctx.incremented(writer), value, now, writer);
            for r in 0..self.replicas.len() {
                self.apply_at(r, key.clone(), version.clone(), now);
            }
        }
    }

    /// Delivers a request to a replica, applying writes and returning read
    /// snapshots (one version list per requested key).
    pub fn serve(&mut self, replica: usize, req: &Request, now: u64) -> Option<Vec<Vec<VersionedValue>>> {
        match req {
            Request::Get(keys) => Some(keys.iter().map(|k| self.replicas[replica].versions(k).to_vec()).collect()),
            Request::Put(writes) => {
                for (k, v) in writes {
                    self.apply_at(replica, k.clone(), v.clone(), now);
                }
                None
            }
            Request::Ping => None,
        }
    }

    pub fn apply_at(&mut self, replica: usize, key: Key, version: VersionedValue, now: u64) {
        if !self.replicas[replica].apply(key.clone(), version.clone()) {
            return;
        }
        let list = self.oracle.entry(key.clone()).or_default();
        if !insert_version(list, version) {
            return;
        }
        let winner = resolve(self.policy, list).expect("non-empty after insert").value;
        let previous = self.latest.insert(key.clone(), winner);
        let prev_value = previous.unwrap_or_else(|| self.defaults.value_for(&key));
        if self.track_changes && prev_value != winner {
            self.changes.push(OracleChange { time: now, key, value: winner });
        }
    }

    /// The value the store converges to for `key`: all replicas' versions,
    /// reduced to undominated ones and resolved.
    pub fn oracle_latest(&self, key: &Key) -> Value {
        self.latest.get(key).copied().unwrap_or_else(|| self.defaults.value_for(key))
    }

    pub fn oracle_versions(&self, key: &Key) -> &[VersionedValue] {
        self.oracle.get(key).map_or(&[], Vec::as_slice)
    }

    /// `oracle_latest` recomputed from scratch over the replicas.
    pub fn oracle_latest_recomputed(&self, key: &Key) -> Value {
        let all = self.replicas.iter().flat_map(|r| r.versions(key).iter().cloned());
        let survivors = undominated(all);
        match resolve(self.policy, &survivors) {
            Ok(v) => v.value,
            Err(_) => self.defaults.value_for(key),
        }
    }

    /// Combines per-replica snapshots of `keys` into read results.
    pub fn combine_reads(&self, keys: &[Key], snapshots: &[&Vec<Vec<VersionedValue>>]) -> Vec<ReadResult> {
        keys.iter()
            .enumerate()
            .map(|(i, key)| {
                let all = snapshots.iter().flat_map(|s| s[i].iter().cloned());
                let versions = undominated(all);
                let value = match resolve(self.policy, &versions) {
                    Ok(v) => v.value,
                    Err(_) => self.defaults.value_for(key),
                };
                ReadResult { key: key.clone(), value, context: context_of(&versions), versions }
            })
            .collect()
    }
}
