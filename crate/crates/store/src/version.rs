use std::cmp::Ordering;

use kvstab_core::Value;
use serde::{Deserialize, Serialize};

use crate::clock::{ClockOrder, VectorClock, WriterId};
use crate::error::{Result, StoreError};

/// A stored value with its causality metadata. `wall_ts` is in
/// microseconds of the store's clock.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VersionedValue {
    pub clock: VectorClock,
    pub value: Value,
    pub wall_ts: u64,
    pub writer: WriterId,
}

impl VersionedValue {
    pub fn new(clock: VectorClock, value: Value, wall_ts: u64, writer: WriterId) -> Self {
        VersionedValue { clock, value, wall_ts, writer }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResolutionPolicy {
    /// Largest `(wall_ts, writer)` wins; the clock breaks any remaining tie
    /// so the order is total.
    #[default]
    LastWriteWins,
}

impl ResolutionPolicy {
    pub fn cmp(&self, a: &VersionedValue, b: &VersionedValue) -> Ordering {
        match self {
            ResolutionPolicy::LastWriteWins => {
                (a.wall_ts, a.writer, &a.clock, a.value).cmp(&(b.wall_ts, b.writer, &b.clock, b.value))
            }
        }
    }
}

/// Picks the winning version. Always returns a member of `versions`.
pub fn resolve(policy: ResolutionPolicy, versions: &[VersionedValue]) -> Result<&VersionedValue> {
    versions.iter().max_by(|a, b| policy.cmp(a, b)).ok_or(StoreError::NoVersions)
}

/// Adds `new` to a set of pairwise-concurrent versions. Versions dominated by
/// `new` are dropped; `new` itself is dropped if an equal or dominating
/// clock is already present. Returns whether `new` was kept.
pub fn insert_version(versions: &mut Vec<VersionedValue>, new: VersionedValue) -> bool {
    for v in versions.iter() {
        match v.clock.compare(&new.clock) {
            ClockOrder::After | ClockOrder::Equal => return false,
            ClockOrder::Before | ClockOrder::Concurrent => {}
        }
    }
    versions.retain(|v| !new.clock.dominates(&v.clock));
    versions.push(new);
    true
}

/// Reduces any collection of versions to its undominated, clock-distinct
/// members, in a deterministic order.
pub fn undominated<I: IntoIterator<Item = VersionedValue>>(all: I) -> Vec<VersionedValue> {
    let mut out = Vec::new();
    for v in all {
        insert_version(&mut out, v);
    }
    out.sort_by(|a, b| a.clock.cmp(&b.clock));
    out
}

/// Merged clock of a version set, the context for a subsequent write.
pub fn context_of(versions: &[VersionedValue]) -> VectorClock {
    let mut ctx = VectorClock::new();
    for v in versions {
        ctx.merge_in(&v.clock);
    }
    ctx
}

pub fn has_dominated_pair(versions: &[VersionedValue]) -> bool {
    versions.iter().enumerate().any(|(i, a)| {
        versions
            .iter()
            .enumerate()
            .any(|(j, b)| i != j && matches!(a.clock.compare(&b.clock), ClockOrder::After | ClockOrder::Equal))
    })
}
