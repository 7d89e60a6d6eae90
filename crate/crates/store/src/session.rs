use std::collections::HashMap;

use kvstab_core::Value;

use crate::clock::{VectorClock, WriterId};
use crate::key::Key;
use crate::version::VersionedValue;

/// Client-side write state. A new version's clock is the read context
/// merged with the writer's own last clock for the key, advanced at the
/// writer, so successive writes by one writer are strictly increasing even
/// when a read came back from a stale replica.
#[derive(Clone, Debug)]
pub struct WriterSession {
    writer: WriterId,
    last: HashMap<Key, VectorClock>,
}

impl WriterSession {
    pub fn new(writer: WriterId) -> Self {
        WriterSession { writer, last: HashMap::new() }
    }

    pub fn writer(&self) -> WriterId {
        self.writer
    }

    pub fn version_for(&mut self, key: &Key, value: Value, context: &VectorClock, wall_ts: u64) -> VersionedValue {
        let mut clock = context.clone();
        if let Some(prev) = self.last.get(key) {
            clock.merge_in(prev);
        }
        clock.increment(self.writer);
        self.last.insert(key.clone(), clock.clone());
        VersionedValue::new(clock, value, wall_ts, self.writer)
    }
}
