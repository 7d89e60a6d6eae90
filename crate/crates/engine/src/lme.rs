//! Local mutual exclusion through per-node locks.
//!
//! A client about to act on node `j` locks every node of `j`'s closed
//! neighborhood, in ascending id order. Two clients therefore never act on
//! adjacent nodes at once, and the global order rules out circular waits.

use std::collections::{BTreeMap, VecDeque};
use std::sync::{Condvar, Mutex};

use kvstab_core::NodeId;

pub type ClientId = usize;

/// Lock ownership and FIFO wait queues, with no notion of time.
#[derive(Clone, Debug, Default)]
pub struct LockTable {
    owner: BTreeMap<NodeId, ClientId>,
    waiting: BTreeMap<NodeId, VecDeque<ClientId>>,
}

impl LockTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Takes `node` for `client` if it is free. Otherwise queues the client
    /// and returns false; the lock is later handed over by [`release`].
    ///
    /// [`release`]: LockTable::release
    pub fn acquire(&mut self, node: NodeId, client: ClientId) -> bool {
        match self.owner.get(&node) {
            None => {
                self.owner.insert(node, client);
                true
            }
            Some(&c) => {
                assert_ne!(c, client, "client {client} already holds {node}");
                self.waiting.entry(node).or_default().push_back(client);
                false
            }
        }
    }

    /// Frees `node` and hands it to the longest waiter, which is returned.
    pub fn release(&mut self, node: NodeId, client: ClientId) -> Option<ClientId> {
        let held = self.owner.remove(&node);
        assert_eq!(held, Some(client), "client {client} released {node} without holding it");
        let next = self.waiting.get_mut(&node).and_then(VecDeque::pop_front)?;
        self.owner.insert(node, next);
        Some(next)
    }

    pub fn owner_of(&self, node: NodeId) -> Option<ClientId> {
        self.owner.get(&node).copied()
    }

    pub fn held_by(&self, client: ClientId) -> Vec<NodeId> {
        self.owner.iter().filter(|(_, &c)| c == client).map(|(&n, _)| n).collect()
    }

    pub fn is_idle(&self) -> bool {
        self.owner.is_empty() && self.waiting.values().all(VecDeque::is_empty)
    }
}

/// Blocking lock manager for threaded runs.
#[derive(Debug, Default)]
pub struct LockManager {
    held: Mutex<BTreeMap<NodeId, ClientId>>,
    freed: Condvar,
}

impl LockManager {
    pub fn new() -> Self {
        Self::default()
    }

    /// Locks every node of `nodes`, which must be sorted ascending. Returns
    /// the time spent waiting.
    pub fn acquire_all(&self, nodes: &[NodeId], client: ClientId) -> std::time::Duration {
        debug_assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        let start = std::time::Instant::now();
        let mut held = self.held.lock().expect("lock table poisoned");
        for &n in nodes {
            while held.contains_key(&n) {
                held = self.freed.wait(held).expect("lock table poisoned");
            }
            held.insert(n, client);
        }
        start.elapsed()
    }

    pub fn release_all(&self, nodes: &[NodeId], client: ClientId) {
        let mut held = self.held.lock().expect("lock table poisoned");
        for n in nodes {
            let owner = held.remove(n);
            debug_assert_eq!(owner, Some(client));
        }
        drop(held);
        self.freed.notify_all();
    }

    pub fn holder(&self, node: NodeId) -> Option<ClientId> {
        self.held.lock().expect("lock table poisoned").get(&node).copied()
    }
}
