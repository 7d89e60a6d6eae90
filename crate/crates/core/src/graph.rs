//! Undirected program graphs.
//!
//! Every node's closed neighborhood contains the node itself; adjacency is
//! kept sorted so iteration order is deterministic everywhere downstream.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub const fn new(id: u32) -> Self {
        NodeId(id)
    }

    pub const fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(v: usize) -> Self {
        NodeId(u32::try_from(v).expect("node id fits in u32"))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphTopology {
    closed: Vec<Vec<NodeId>>,
}

impl GraphTopology {
    /// Builds a topology over nodes `0..node_count`. Self-loops in `edges`
    /// are accepted and ignored (every node is implicitly its own neighbor),
    /// duplicate edges collapse.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if node_count == 0 {
            return Err(ModelError::Topology("graph needs at least one node".into()));
        }
        if u32::try_from(node_count).is_err() {
            return Err(ModelError::Topology(format!("{node_count} nodes is too many")));
        }
        let mut sets: Vec<BTreeSet<NodeId>> = (0..node_count).map(|j| BTreeSet::from([NodeId::from(j)])).collect();
        for (a, b) in edges {
            if a >= node_count || b >= node_count {
                return Err(ModelError::Topology(format!("edge ({a}, {b}) references a node outside 0..{node_count}")));
            }
            sets[a].insert(NodeId::from(b));
            sets[b].insert(NodeId::from(a));
        }
        Ok(GraphTopology { closed: sets.into_iter().map(|s| s.into_iter().collect()).collect() })
    }

    pub fn node_count(&self) -> usize {
        self.closed.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.closed.len()).map(NodeId::from)
    }

    pub fn contains(&self, j: NodeId) -> bool {
        j.index() < self.closed.len()
    }

    /// Sorted closed neighborhood `{k | (j, k) ∈ E}`, including `j`.
    pub fn closed_neighborhood(&self, j: NodeId) -> Result<&[NodeId]> {
        self.closed.get(j.index()).map(Vec::as_slice).ok_or(ModelError::UnknownNode(j))
    }

    /// Open neighborhood of `j`. Panics if `j` is not a node.
    pub fn neighbors(&self, j: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.closed[j.index()].iter().copied().filter(move |&k| k != j)
    }

    pub fn degree(&self, j: NodeId) -> usize {
        self.closed[j.index()].len() - 1
    }

    pub fn max_closed_size(&self) -> usize {
        self.closed.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn are_adjacent(&self, a: NodeId, b: NodeId) -> bool {
        a != b && self.closed[a.index()].binary_search(&b).is_ok()
    }

    /// Undirected edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for (a, adj) in self.closed.iter().enumerate() {
            let a = NodeId::from(a);
            out.extend(adj.iter().filter(|&&b| b > a).map(|&b| (a, b)));
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.closed.iter().map(|c| c.len() - 1).sum::<usize>() / 2
    }

    /// Nodes within `radius` hops of `j` (including `j`), sorted.
    pub fn ball(&self, j: NodeId, radius: usize) -> Vec<NodeId> {
        let mut dist = vec![usize::MAX; self.node_count()];
        let mut queue = VecDeque::from([j]);
        dist[j.index()] = 0;
        let mut out = vec![j];
        while let Some(u) = queue.pop_front() {
            let d = dist[u.index()];
            if d == radius {
                continue;
            }
            for v in self.neighbors(u) {
                if dist[v.index()] == usize::MAX {
                    dist[v.index()] = d + 1;
                    out.push(v);
                    queue.push_back(v);
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn is_connected(&self) -> bool {
        self.ball(NodeId(0), usize::MAX).len() == self.node_count()
    }

    pub fn single() -> Self {
        Self::from_edges(1, []).expect("one node")
    }

    pub fn path(n: usize) -> Result<Self> {
        Self::from_edges(n, (1..n).map(|j| (j - 1, j)))
    }

    /// Cycle `0 - 1 - ... - (n-1) - 0`. For `n == 2` this is a single edge.
    pub fn ring(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(ModelError::Topology("a ring needs at least two nodes".into()));
        }
        Self::from_edges(n, (0..n).map(|j| (j, (j + 1) % n)))
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::from_edges(n, (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))))
    }

    /// Uniform random `d`-regular simple graph via the pairing model with
    /// rejection.
    pub fn random_regular<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<Self> {
        if d >= n || (n * d) % 2 != 0 {
            return Err(ModelError::Topology(format!("no simple {d}-regular graph on {n} nodes")));
        }
        const MAX_TRIES: usize = 10_000;
        let mut stubs: Vec<usize> = (0..n).flat_map(|j| std::iter::repeat(j).take(d)).collect();
        'attempt: for _ in 0..MAX_TRIES {
            stubs.shuffle(rng);
            let mut seen = BTreeSet::new();
            for pair in stubs.chunks_exact(2) {
                let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
                if a == b || !seen.insert((a, b)) {
                    continue 'attempt;
                }
            }
            return Self::from_edges(n, seen);
        }
        Err(ModelError::Topology(format!("pairing model failed to produce a simple {d}-regular graph on {n} nodes")))
    }

    /// Erdős–Rényi `G(n, p)`.
    pub fn gnp<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(ModelError::Topology(format!("edge probability {p} not in [0, 1]")));
        }
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(p) {
                    edges.push((a, b));
                }
            }
        }
        Self::from_edges(n, edges)
    }

    /// Every connected labeled graph on `n` nodes (n ≤ 6 keeps this small).
    pub fn all_connected_labeled(n: usize) -> Vec<Self> {
        assert!((1..=6).contains(&n), "enumeration limited to 1..=6 nodes");
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        let mut out = Vec::new();
        for mask in 0u32..(1 << pairs.len()) {
            let edges = pairs.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, &e)| e);
            let g = Self::from_edges(n, edges).expect("valid edges");
            if g.is_connected() {
                out.push(g);
            }
        }
        out
    }
}

/// Closed neighborhood as a set.
pub fn closed_neighborhood(topology: &GraphTopology, j: NodeId) -> Result<BTreeSet<NodeId>> {
    Ok(topology.closed_neighborhood(j)?.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn set(ids: &[u32]) -> BTreeSet<NodeId> {
        ids.iter().map(|&i| NodeId(i)).collect()
    }

    #[test]
    fn closed_neighborhood_examples() {
        let path = GraphTopology::path(3).unwrap();
        assert_eq!(closed_neighborhood(&path, NodeId(1)).unwrap(), set(&[0, 1, 2]));
        assert_eq!(closed_neighborhood(&path, NodeId(0)).unwrap(), set(&[0, 1]));
        let single = GraphTopology::single();
        assert_eq!(closed_neighborhood(&single, NodeId(0)).unwrap(), set(&[0]));
        assert_eq!(closed_neighborhood(&path, NodeId(3)), Err(ModelError::UnknownNode(NodeId(3))));
    }

    #[test]
    fn adjacency_is_symmetric_with_self_loops() {
        let g = GraphTopology::from_edges(4, [(0, 1), (2, 1), (3, 3), (0, 1)]).unwrap();
        for j in g.nodes() {
            assert!(g.closed_neighborhood(j).unwrap().contains(&j));
            for k in g.neighbors(j) {
                assert!(g.are_adjacent(k, j));
            }
        }
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.degree(NodeId(3)), 0);
    }

    #[test]
    fn random_regular_degrees() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let g = GraphTopology::random_regular(200, 4, &mut rng).unwrap();
        assert!(g.nodes().all(|j| g.degree(j) == 4));
        assert!(GraphTopology::random_regular(5, 3, &mut rng).is_err());
    }

    #[test]
    fn ball_radius() {
        let g = GraphTopology::path(6).unwrap();
        assert_eq!(g.ball(NodeId(2), 2), vec![NodeId(0), NodeId(1), NodeId(2), NodeId(3), NodeId(4)]);
        assert_eq!(g.ball(NodeId(0), 0), vec![NodeId(0)]);
    }

    #[test]
    fn labeled_connected_counts() {
        // OEIS A001187: 1, 1, 4, 38, 728
        let counts: Vec<usize> = (1..=5).map(|n| GraphTopology::all_connected_labeled(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 4, 38, 728]);
    }
}
