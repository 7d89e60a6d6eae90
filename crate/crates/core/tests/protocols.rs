use std::sync::Arc;

use kvstab_core::protocols::matching::{self, NodeStatus};
use kvstab_core::protocols::token_ring;
use kvstab_core::{GlobalState, GraphTopology, NodeId, ProtocolInstance, StateSpace, Value};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent maximality check: builds the edge set from mutual pointers,
/// confirms no node is used twice, and tries to greedily add every graph
/// edge. A matching is maximal iff no edge can be added.
fn greedy_maximal(topology: &GraphTopology, state: &GlobalState) -> bool {
    let n = topology.node_count();
    let mut used = vec![false; n];
    for (a, b) in topology.edges() {
        let pa = state.get(a, matching::P);
        let pb = state.get(b, matching::P);
        if pa == Value::Node(b) && pb == Value::Node(a) {
            if used[a.index()] || used[b.index()] {
                return false;
            }
            used[a.index()] = true;
            used[b.index()] = true;
        }
    }
    topology.edges().into_iter().all(|(a, b)| used[a.index()] || used[b.index()])
}

#[test]
fn matching_invariant_states_are_silent_and_maximal() {
    for n in 1..=4 {
        for topo in GraphTopology::all_connected_labeled(n) {
            let topo = Arc::new(topo);
            let spec = matching::matching_spec(topo.clone());
            let space = StateSpace::new(&spec, u64::MAX).unwrap();
            let mut legit = 0;
            for s in space.states() {
                if !matching::matching_invariant(&topo, &s) {
                    continue;
                }
                legit += 1;
                assert!(!spec.any_enabled(&s), "enabled action in I: {s:?}");
                assert!(greedy_maximal(&topo, &s), "not maximal: {s:?}");
            }
            assert!(legit > 0);
        }
    }
}

#[test]
fn matching_fixpoints_are_exactly_invariant_states() {
    for n in 1..=4 {
        for topo in GraphTopology::all_connected_labeled(n) {
            let topo = Arc::new(topo);
            let spec = matching::matching_spec(topo.clone());
            let space = StateSpace::new(&spec, u64::MAX).unwrap();
            for s in space.states() {
                assert_eq!(!spec.any_enabled(&s), matching::matching_invariant(&topo, &s), "{s:?}");
            }
        }
    }
}

#[test]
fn local_invariant_agrees_with_global() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let topo = Arc::new(GraphTopology::random_regular(12, 3, &mut rng).unwrap());
    let inst = ProtocolInstance::matching(topo.clone());
    let local = inst.invariant.local().unwrap();
    for seed in 0..200u64 {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let s = random_matching_state(&topo, &mut r);
        let all_local = topo.nodes().all(|j| local.check(&s, j));
        assert_eq!(all_local, inst.invariant.holds(&s));
    }
}

fn random_matching_state(topo: &GraphTopology, rng: &mut ChaCha8Rng) -> GlobalState {
    use rand::Rng;
    let n = topo.node_count();
    let values = (0..n)
        .flat_map(|_| {
            let p = rng.gen_range(0..=n);
            let p = if p == n { Value::Null } else { Value::Node(NodeId::from(p)) };
            [p, Value::Bool(rng.gen())]
        })
        .collect();
    GlobalState::new(2, values)
}

#[test]
fn token_ring_closure_exhaustive() {
    for n_nodes in 2..=6 {
        for k in 2..=6u32 {
            let spec = token_ring::token_spec(n_nodes, k).unwrap();
            let space = StateSpace::new(&spec, u64::MAX).unwrap();
            for s in space.states() {
                if !token_ring::token_invariant(&s, k) {
                    continue;
                }
                let succ = spec.successors(&s).unwrap();
                // Exactly one privilege circulates inside I.
                assert_eq!(succ.len(), 1, "N={} K={k} {s:?}", n_nodes - 1);
                for (t, _) in succ {
                    assert!(token_ring::token_invariant(&t, k));
                }
            }
        }
    }
}

#[test]
fn node_status_examples() {
    let path = GraphTopology::path(3).unwrap();
    let s = GlobalState::new(
        2,
        vec![
            Value::Node(NodeId(1)),
            Value::Bool(true),
            Value::Node(NodeId(0)),
            Value::Bool(true),
            Value::Null,
            Value::Bool(false),
        ],
    );
    assert_eq!(matching::node_status(&path, &s, NodeId(0)), NodeStatus::Matched);
    assert_eq!(matching::node_status(&path, &s, NodeId(2)), NodeStatus::Dead);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn invariant_implies_greedy_maximal(seed in 0u64..10_000, n in 2usize..16) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let topo = Arc::new(GraphTopology::gnp(n, 0.3, &mut rng).unwrap());
        let spec = matching::matching_spec(topo.clone());
        let mut s = random_matching_state(&topo, &mut rng);
        // Drive to a fixpoint with a central daemon picking the lowest enabled node.
        for _ in 0..10_000 {
            let Some((t, _)) = spec.successors(&s).unwrap().into_iter().next() else { break };
            s = t;
        }
        prop_assert!(!spec.any_enabled(&s));
        prop_assert!(matching::matching_invariant(&topo, &s));
        prop_assert!(greedy_maximal(&topo, &s));
    }

    #[test]
    fn matching_writes_stay_in_working_domain(seed in 0u64..10_000, n in 2usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let topo = Arc::new(GraphTopology::gnp(n, 0.5, &mut rng).unwrap());
        let spec = matching::matching_spec(topo.clone());
        let s = random_matching_state(&topo, &mut rng);
        for (t, a) in spec.successors(&s).unwrap() {
            let j = a.owner();
            if t.get(j, matching::P) == s.get(j, matching::P) {
                continue;
            }
            match t.get(j, matching::P) {
                Value::Null => {}
                Value::Node(u) => prop_assert!(topo.are_adjacent(j, u) && u != j),
                other => prop_assert!(false, "bad pointer {other:?}"),
            }
        }
    }
}
