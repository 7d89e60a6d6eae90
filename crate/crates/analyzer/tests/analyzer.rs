use std::collections::BTreeSet;
use std::sync::Arc;

use kvstab_analyzer::mutants;
use kvstab_analyzer::{
    build_transition_system, cvf_transitions, max_recovery_by, max_recovery_steps, minimal_k, single_corruptions,
    verify_contained_k_active, verify_k_active, verify_silent, verify_stabilization, AdversaryKind, AdversaryModel,
    AnalyzerError, Report, TransitionSystem, Verdict, Violation,
};
use kvstab_core::protocols::matching;
use kvstab_core::protocols::token_ring::{self, state_of};
use kvstab_core::{
    Domain, GlobalState, GraphTopology, InvariantPredicate, ModelError, NodeId, ProgramSpec, ProtocolInstance, Value,
    VarDecl, DEFAULT_STATE_CAP,
};

fn token(nodes: usize, k: u32) -> (TransitionSystem, Vec<bool>) {
    let inst = ProtocolInstance::token_ring(nodes, k).unwrap();
    let ts = build_transition_system(&inst.spec, DEFAULT_STATE_CAP).unwrap();
    let inv = ts.invariant_mask(&inst.invariant);
    (ts, inv)
}

fn matching_ts(topo: GraphTopology) -> (TransitionSystem, Vec<bool>) {
    let inst = ProtocolInstance::matching(Arc::new(topo));
    let ts = build_transition_system(&inst.spec, DEFAULT_STATE_CAP).unwrap();
    let inv = ts.invariant_mask(&inst.invariant);
    (ts, inv)
}

fn matching_invariant_mask(ts: &TransitionSystem) -> Vec<bool> {
    let topo = ts.spec().topology_arc().clone();
    ts.states().map(|s| matching::matching_invariant(&topo, &ts.state(s))).collect()
}

fn edges_of(adv: &AdversaryModel) -> BTreeSet<(u32, u32)> {
    adv.pairs().collect()
}

fn idx(ts: &TransitionSystem, xs: &[i64]) -> u32 {
    ts.index_of(&state_of(xs)).unwrap()
}

/// Longest path to the invariant by repeated relaxation over all states;
/// `None` when the values have not settled after |S| + 1 rounds.
fn relaxed_longest_paths(ts: &TransitionSystem, inv: &[bool]) -> Option<Vec<u64>> {
    let n = ts.state_count();
    let mut d = vec![0u64; n];
    for _ in 0..=n + 1 {
        let next: Vec<u64> = (0..n)
            .map(|s| {
                if inv[s] {
                    0
                } else {
                    ts.successors(s as u32).iter().map(|e| 1 + d[e.to as usize]).max().unwrap_or(u64::MAX / 2)
                }
            })
            .collect();
        if next == d {
            return Some(d);
        }
        d = next;
    }
    None
}

#[test]
fn state_space_sizes() {
    assert_eq!(token(3, 2).0.state_count(), 8);
    assert_eq!(token(3, 3).0.state_count(), 27);
    let edge = GraphTopology::path(2).unwrap();
    assert_eq!(matching_ts(edge).0.state_count(), 36);
}

#[test]
fn state_space_cap_is_enforced() {
    let spec = token_ring::token_spec(6, 6).unwrap();
    match build_transition_system(&spec, 1000) {
        Err(AnalyzerError::Model(ModelError::Capacity { size, cap })) => {
            assert_eq!(size, 46_656);
            assert_eq!(cap, 1000);
        }
        other => panic!("expected a capacity error, got {:?}", other.err()),
    }
}

#[test]
fn edge_labels_name_the_acting_node() {
    let (ts, _) = token(4, 3);
    for s in ts.states() {
        let from = ts.state(s);
        for e in ts.successors(s) {
            assert_eq!(from.differing_nodes(&ts.state(e.to)), vec![e.label.node]);
            let expected = if e.label.node.index() == 0 { "Increment" } else { "Copy" };
            assert_eq!(ts.rule_name(e.label), expected);
        }
    }
}

#[test]
fn token_cvf_includes_stale_copy() {
    let (ts, inv) = token(3, 2);
    let adv = cvf_transitions(&ts, AdversaryKind::ActionDerivedCvf, &inv);
    let from = idx(&ts, &[0, 0, 0]);
    let to = idx(&ts, &[0, 1, 0]);
    assert!(adv.successors(from).iter().any(|e| e.to == to && e.node == NodeId(1)));
}

/// With stale neighbors unconstrained, a copying node can take any other
/// value and node 0 can only advance by one.
#[test]
fn token_cvf_matches_closed_form() {
    for (nodes, k) in [(3, 2), (3, 3), (4, 3), (4, 4)] {
        let (ts, inv) = token(nodes, k);
        let adv = cvf_transitions(&ts, AdversaryKind::ActionDerivedCvf, &inv);
        let mut expected = BTreeSet::new();
        for s in ts.states() {
            let st = ts.state(s);
            let xs: Vec<i64> = st.values().iter().map(|v| v.as_int().unwrap()).collect();
            let mut inc = xs.clone();
            inc[0] = (xs[0] + 1) % i64::from(k);
            expected.insert((s, idx(&ts, &inc)));
            for j in 1..nodes {
                for x in 0..i64::from(k) {
                    if x != xs[j] {
                        let mut t = xs.clone();
                        t[j] = x;
                        expected.insert((s, idx(&ts, &t)));
                    }
                }
            }
        }
        assert_eq!(edges_of(&adv), expected, "nodes={nodes} k={k}");
    }
}

#[test]
fn matching_cvf_from_invariant_is_nonempty() {
    let (ts, inv) = matching_ts(GraphTopology::path(2).unwrap());
    let adv = cvf_transitions(&ts, AdversaryKind::ActionDerivedCvf, &inv);
    let married =
        GlobalState::new(2, vec![Value::Node(NodeId(1)), Value::Bool(true), Value::Node(NodeId(0)), Value::Bool(true)]);
    let s = ts.index_of(&married).unwrap();
    assert!(inv[s as usize]);
    let outs = adv.successors(s);
    assert!(!outs.is_empty());
    // A stale view in which the partner no longer points back shows an
    // Update; with the flag already lowered, Abandonment follows.
    let targets: Vec<GlobalState> = outs.iter().map(|e| ts.state(e.to)).collect();
    assert!(targets.iter().any(|t| t.get(NodeId(0), matching::M) == Value::Bool(false)));
}

fn check_cvf_shape(ts: &TransitionSystem, inv: &[bool]) {
    let arb = cvf_transitions(ts, AdversaryKind::ArbitraryOneNode, inv);
    let derived = cvf_transitions(ts, AdversaryKind::ActionDerivedCvf, inv);
    let arb_edges = edges_of(&arb);
    for adv in [&arb, &derived] {
        for s in ts.states() {
            for e in adv.successors(s) {
                assert_eq!(ts.state(s).differing_nodes(&ts.state(e.to)), vec![e.node]);
            }
        }
    }
    assert!(edges_of(&derived).is_subset(&arb_edges));
    // Arbitrary single-node change: every other assignment of every node.
    let per_node: u64 = ts.spec().vars().iter().map(|v| v.domain.size()).product();
    let n = ts.spec().node_count() as u64;
    assert_eq!(arb.edge_count() as u64, ts.state_count() as u64 * n * (per_node - 1));
}

#[test]
fn cvf_edges_change_one_node_and_are_arbitrary_faults() {
    for (nodes, k) in [(3, 2), (3, 4), (4, 3)] {
        let (ts, inv) = token(nodes, k);
        check_cvf_shape(&ts, &inv);
    }
    for n in 1..=3 {
        for topo in GraphTopology::all_connected_labeled(n) {
            let (ts, inv) = matching_ts(topo);
            check_cvf_shape(&ts, &inv);
        }
    }
}

fn program_edges_without_self_loops(ts: &TransitionSystem) -> BTreeSet<(u32, u32)> {
    ts.states().flat_map(|s| ts.successors(s).iter().filter(move |e| e.to != s).map(move |e| (s, e.to))).collect()
}

#[test]
fn fresh_views_give_the_program_relation() {
    let mut systems = vec![token(3, 3), token(4, 2)];
    systems.push(matching_ts(GraphTopology::path(3).unwrap()));
    systems.push(matching_ts(GraphTopology::complete(3).unwrap()));
    for (ts, inv) in systems {
        let fresh = cvf_transitions(&ts, AdversaryKind::ActionDerivedFresh, &inv);
        assert_eq!(edges_of(&fresh), program_edges_without_self_loops(&ts));
        let stale = cvf_transitions(&ts, AdversaryKind::ActionDerivedCvf, &inv);
        assert!(edges_of(&fresh).is_subset(&edges_of(&stale)));
    }
}

#[test]
fn token_ring_stabilizes_and_is_not_silent() {
    let (ts, inv) = token(3, 3);
    assert_eq!(verify_stabilization(&ts, &inv), Verdict::Pass);
    let silent = verify_silent(&ts, &inv);
    assert_eq!(silent.violation(), Some(Violation::NotSilent));
}

#[test]
fn token_mutants_are_rejected() {
    for spec in
        [mutants::token_increment_guard_inverted(3, 3).unwrap(), mutants::token_copy_guard_inverted(3, 3).unwrap()]
    {
        let ts = build_transition_system(&spec, DEFAULT_STATE_CAP).unwrap();
        let inv: Vec<bool> = ts.states().map(|s| token_ring::token_invariant(&ts.state(s), 3)).collect();
        let v = verify_stabilization(&ts, &inv);
        assert!(!v.is_pass(), "mutant accepted");
    }
}

#[test]
fn matching_is_silent_on_small_connected_graphs() {
    let mut graphs = 0;
    for n in 1..=4 {
        for topo in GraphTopology::all_connected_labeled(n) {
            let (ts, inv) = matching_ts(topo);
            let v = verify_silent(&ts, &inv);
            assert!(v.is_pass(), "{}", Report::new("silent", format!("n={n}"), v, &ts));
            graphs += 1;
        }
    }
    assert_eq!(graphs, 1 + 1 + 4 + 38);
}

#[test]
fn matching_mutants_are_rejected() {
    for n in 2..=3 {
        for topo in GraphTopology::all_connected_labeled(n) {
            let topo = Arc::new(topo);
            let specs = [
                ("seduction-unordered", mutants::matching_seduction_unordered(topo.clone())),
                ("no-abandonment", mutants::matching_without_abandonment(topo.clone())),
                ("no-update", mutants::matching_without_update(topo.clone())),
            ];
            for (name, spec) in specs {
                let ts = build_transition_system(&spec, DEFAULT_STATE_CAP).unwrap();
                let inv = matching_invariant_mask(&ts);
                if n == 3 || name != "no-abandonment" {
                    assert!(!verify_stabilization(&ts, &inv).is_pass(), "{name} accepted on {:?}", topo.edges());
                }
            }
        }
    }
}

#[test]
fn empty_program_with_full_invariant_is_silent() {
    let topo = Arc::new(GraphTopology::path(3).unwrap());
    let vars = vec![VarDecl::new("x", Domain::IntRange { lo: 0, hi: 3 }, Value::Int(0))];
    let spec = ProgramSpec::new(topo, vars, vec![Vec::new(); 3]).unwrap();
    let ts = build_transition_system(&spec, DEFAULT_STATE_CAP).unwrap();
    assert_eq!(ts.edge_count(), 0);
    let inv = ts.invariant_mask(&InvariantPredicate::new("true", |_| true));
    assert_eq!(verify_silent(&ts, &inv), Verdict::Pass);
    // With some state outside the invariant, nothing moves it back.
    let partial = ts.invariant_mask(&InvariantPredicate::new("x.0 = 0", |s| s.get(NodeId(0), 0) == Value::Int(0)));
    assert_eq!(verify_stabilization(&ts, &partial).violation(), Some(Violation::Deadlock));
}

#[test]
fn k_active_without_adversary_is_stabilization() {
    let mut systems = Vec::new();
    for (nodes, k) in [(3, 3), (4, 2), (4, 3), (4, 4), (5, 3)] {
        systems.push(token(nodes, k));
    }
    for topo in GraphTopology::all_connected_labeled(3) {
        systems.push(matching_ts(topo));
    }
    let spec = mutants::token_copy_guard_inverted(3, 3).unwrap();
    let ts = build_transition_system(&spec, DEFAULT_STATE_CAP).unwrap();
    let inv: Vec<bool> = ts.states().map(|s| token_ring::token_invariant(&ts.state(s), 3)).collect();
    systems.push((ts, inv));
    for (ts, inv) in systems {
        let adv = AdversaryModel::empty(ts.state_count());
        let stab = verify_stabilization(&ts, &inv);
        for k in [2, 3, 7] {
            let ka = verify_k_active(&ts, &adv, k, &inv).unwrap();
            assert_eq!(ka.is_pass(), stab.is_pass());
            assert_eq!(ka.violation(), stab.violation());
            assert_eq!(verify_contained_k_active(&ts, &adv, k, &inv).unwrap().is_pass(), stab.is_pass());
        }
    }
}

#[test]
fn k_below_two_is_rejected() {
    let (ts, inv) = token(3, 3);
    let adv = AdversaryModel::empty(ts.state_count());
    assert_eq!(verify_k_active(&ts, &adv, 1, &inv), Err(AnalyzerError::InvalidK(1)));
    assert_eq!(verify_contained_k_active(&ts, &adv, 0, &inv), Err(AnalyzerError::InvalidK(0)));
}

#[test]
fn literal_k_active_needs_adversary_closure() {
    // Stale copies leave the invariant, so the literal definition fails
    // for every k on the token ring.
    let (ts, inv) = token(3, 3);
    let adv = cvf_transitions(&ts, AdversaryKind::ActionDerivedCvf, &inv);
    for k in [2, 5, 50] {
        let v = verify_k_active(&ts, &adv, k, &inv).unwrap();
        assert_eq!(v.violation(), Some(Violation::AdversaryClosureEdge));
    }
}

#[test]
fn large_k_passes_when_adversary_respects_closure() {
    for (nodes, k) in [(3, 3), (4, 4)] {
        let (ts, inv) = token(nodes, k);
        let adv = cvf_transitions(&ts, AdversaryKind::ArbitraryOneNodeOutsideInvariant, &inv);
        let all: Vec<u32> = ts.states().collect();
        let longest = max_recovery_steps(&ts, &inv, &all).unwrap() as u32;
        assert_eq!(verify_k_active(&ts, &adv, longest + 1, &inv).unwrap(), Verdict::Pass);
        // With k = 2 the adversary can undo every second program step.
        assert_eq!(verify_k_active(&ts, &adv, 2, &inv).unwrap().violation(), Some(Violation::Cycle));
    }
}

#[test]
fn matching_with_arbitrary_faults_is_not_contained_in_one_step() {
    let (ts, inv) = matching_ts(GraphTopology::path(3).unwrap());
    let adv = cvf_transitions(&ts, AdversaryKind::ArbitraryOneNode, &inv);
    let v = verify_contained_k_active(&ts, &adv, 2, &inv).unwrap();
    let report = Report::new("contained 2-active", "matching path3", v.clone(), &ts);
    assert!(!report.passed());
    assert!(report.to_string().contains("CounterExample"));
    assert_eq!(report.witness().len(), v.counter_example().unwrap().path.len());
}

/// Worst recovery after one cvf from the invariant, by relaxation.
fn contained_bound(ts: &TransitionSystem, inv: &[bool], adv: &AdversaryModel) -> u64 {
    let d = relaxed_longest_paths(ts, inv).expect("acyclic outside the invariant");
    adv.pairs().filter(|&(s, _)| inv[s as usize]).map(|(_, t)| d[t as usize]).max().unwrap_or(0)
}

#[test]
fn token_minimal_contained_k() {
    let (ts, inv) = token(3, 3);
    let adv = cvf_transitions(&ts, AdversaryKind::ActionDerivedCvf, &inv);
    let all: Vec<u32> = ts.states().collect();
    let longest = max_recovery_steps(&ts, &inv, &all).unwrap() as u32;
    let k = minimal_k(longest + 1, |k| verify_contained_k_active(&ts, &adv, k, &inv)).unwrap();
    assert_eq!(k, Some(5));
    assert_eq!(u64::from(k.unwrap()) - 1, contained_bound(&ts, &inv, &adv));
    assert!(!verify_contained_k_active(&ts, &adv, 4, &inv).unwrap().is_pass());
}

#[test]
fn minimal_contained_k_is_the_worst_single_cvf_recovery() {
    for (nodes, k) in [(2, 2), (3, 2), (3, 4), (4, 3), (4, 4)] {
        let (ts, inv) = token(nodes, k);
        let adv = cvf_transitions(&ts, AdversaryKind::ActionDerivedCvf, &inv);
        let all: Vec<u32> = ts.states().collect();
        let longest = max_recovery_steps(&ts, &inv, &all).unwrap() as u32;
        let found = minimal_k(longest + 1, |k| verify_contained_k_active(&ts, &adv, k, &inv)).unwrap();
        let bound = contained_bound(&ts, &inv, &adv).max(1);
        assert_eq!(found, Some(bound as u32 + 1), "nodes={nodes} K={k}");
    }
}

#[test]
fn recovery_from_invariant_is_zero() {
    let (ts, inv) = token(4, 4);
    let legit: Vec<u32> = ts.states().filter(|&s| inv[s as usize]).collect();
    assert_eq!(max_recovery_steps(&ts, &inv, &legit).unwrap(), 0);
}

#[test]
fn recovery_matches_relaxation() {
    for (nodes, k) in [(3, 3), (4, 4), (4, 5), (5, 5)] {
        let (ts, inv) = token(nodes, k);
        let d = relaxed_longest_paths(&ts, &inv).unwrap();
        let all: Vec<u32> = ts.states().collect();
        assert_eq!(max_recovery_steps(&ts, &inv, &all).unwrap(), *d.iter().max().unwrap());
        let corr = single_corruptions(&ts, &inv);
        let expect = corr.iter().map(|&s| d[s as usize]).max().unwrap();
        assert_eq!(max_recovery_steps(&ts, &inv, &corr).unwrap(), expect);
    }
}

#[test]
fn single_corruption_recovery_is_shorter() {
    let (ts, inv) = token(4, 4);
    let all: Vec<u32> = ts.states().collect();
    let corr = single_corruptions(&ts, &inv);
    assert_eq!(max_recovery_steps(&ts, &inv, &all).unwrap(), 14);
    assert_eq!(max_recovery_steps(&ts, &inv, &corr).unwrap(), 13);
    let node0 = max_recovery_by(&ts, &inv, &corr, |l| u64::from(l.node.index() == 0));
    assert_eq!(node0.unwrap(), 2);
}

#[test]
fn recovery_bound_is_monotone_in_k() {
    for (nodes, ks) in [(2, 2..=6), (3, 2..=6), (4, 3..=6)] {
        let mut prev = 0;
        for k in ks {
            let (ts, inv) = token(nodes, k);
            let all: Vec<u32> = ts.states().collect();
            let b = max_recovery_steps(&ts, &inv, &all).unwrap();
            assert!(b >= prev, "nodes={nodes} K={k}: {b} < {prev}");
            prev = b;
        }
    }
}

#[test]
fn recovery_reports_cycles() {
    let (ts, inv) = token(4, 2);
    let all: Vec<u32> = ts.states().collect();
    assert!(matches!(max_recovery_steps(&ts, &inv, &all), Err(AnalyzerError::Unbounded(_))));
}

mod props {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn cvf_shape_on_random_small_graphs(n in 2usize..=3, seed in any::<u64>()) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let topo = GraphTopology::gnp(n, 0.7, &mut rng).unwrap();
            prop_assume!(topo.is_connected());
            let (ts, inv) = matching_ts(topo);
            check_cvf_shape(&ts, &inv);
        }

        #[test]
        fn verdicts_agree_with_relaxation(nodes in 2usize..=4, k in 2u32..=4) {
            let (ts, inv) = token(nodes, k);
            let stab = verify_stabilization(&ts, &inv).is_pass();
            prop_assert_eq!(stab, relaxed_longest_paths(&ts, &inv).is_some());
        }
    }
}
