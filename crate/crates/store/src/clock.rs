use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Identity of a client (or the initializer) that writes to the store.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WriterId(pub u32);

impl fmt::Display for WriterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "w{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ClockOrder {
    Before,
    After,
    Equal,
    Concurrent,
}

/// Sparse vector clock; absent writers count as zero. Zero counters are
/// never stored, so structural equality coincides with clock equality.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VectorClock {
    counters: BTreeMap<WriterId, u64>,
}

impl VectorClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (WriterId, u64)>>(pairs: I) -> Self {
        let counters = pairs.into_iter().filter(|&(_, c)| c > 0).collect();
        VectorClock { counters }
    }

    pub fn get(&self, writer: WriterId) -> u64 {
        self.counters.get(&writer).copied().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.counters.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (WriterId, u64)> + '_ {
        self.counters.iter().map(|(&w, &c)| (w, c))
    }

    pub fn increment(&mut self, writer: WriterId) {
        *self.counters.entry(writer).or_insert(0) += 1;
    }

    pub fn incremented(mut self, writer: WriterId) -> Self {
        self.increment(writer);
        self
    }

    /// Pointwise maximum, in place.
    pub fn merge_in(&mut self, other: &VectorClock) {
        for (&w, &c) in &other.counters {
            let e = self.counters.entry(w).or_insert(0);
            *e = (*e).max(c);
        }
    }

    pub fn merged(&self, other: &VectorClock) -> VectorClock {
        let mut out = self.clone();
        out.merge_in(other);
        out
    }

    pub fn compare(&self, other: &VectorClock) -> ClockOrder {
        let mut le = true;
        let mut ge = true;
        let writers = self.counters.keys().chain(other.counters.keys());
        for &w in writers {
            match self.get(w).cmp(&other.get(w)) {
                Ordering::Less => ge = false,
                Ordering::Greater => le = false,
                Ordering::Equal => {}
            }
            if !le && !ge {
                return ClockOrder::Concurrent;
            }
        }
        match (le, ge) {
            (true, true) => ClockOrder::Equal,
            (true, false) => ClockOrder::Before,
            (false, true) => ClockOrder::After,
            (false, false) => ClockOrder::Concurrent,
        }
    }

    /// Strictly dominates `other`.
    pub fn dominates(&self, other: &VectorClock) -> bool {
        self.compare(other) == ClockOrder::After
    }
}

impl fmt::Display for VectorClock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (w, c)) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{w}:{c}")?;
        }
        f.write_str("}")
    }
}

pub fn vc_compare(a: &VectorClock, b: &VectorClock) -> ClockOrder {
    a.compare(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: WriterId = WriterId(1);
    const B: WriterId = WriterId(2);

    #[test]
    fn compare_examples() {
        let empty = VectorClock::new();
        assert_eq!(vc_compare(&empty, &empty), ClockOrder::Equal);
        let a2 = VectorClock::from_pairs([(A, 2)]);
        let a1 = VectorClock::from_pairs([(A, 1)]);
        assert_eq!(vc_compare(&a2, &a1), ClockOrder::After);
        assert_eq!(vc_compare(&a1, &a2), ClockOrder::Before);
        let b1 = VectorClock::from_pairs([(B, 1)]);
        assert_eq!(vc_compare(&a1, &b1), ClockOrder::Concurrent);
    }

    #[test]
    fn zero_entries_are_absent() {
        assert_eq!(VectorClock::from_pairs([(A, 0)]), VectorClock::new());
    }

    #[test]
    fn merge_dominates_both() {
        let a = VectorClock::from_pairs([(A, 3), (B, 1)]);
        let b = VectorClock::from_pairs([(B, 4)]);
        let m = a.merged(&b);
        assert_eq!(m, VectorClock::from_pairs([(A, 3), (B, 4)]));
        assert!(m.clone().incremented(A).dominates(&a));
        assert!(m.incremented(A).dominates(&b));
    }
}
