use std::sync::Arc;

use kvstab_core::protocols::matching::{self, M, P};
use kvstab_core::protocols::token_ring;
use kvstab_core::{GlobalState, GraphTopology, NodeId, ProtocolInstance, Value};
use kvstab_harness::{
    build_instance, build_topology, check_maximal_matching, convergence_pattern, dominance, gen_initial,
    legitimate_state, repetition_seeds, run_experiment, run_experiment_logged, speedup, sweep, topology_hash,
    verify_instance, with_value, write_report_csv, Dimension, ExperimentConfig, Generator, InitialMode, MatchingFlaw,
    ProtocolChoice, RunMode, TopologyConfig, REPORT_COLUMNS,
};
use proptest::prelude::*;

fn n(i: u32) -> NodeId {
    NodeId(i)
}

fn small(nodes: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        id: "small".into(),
        topology: TopologyConfig { generator: Generator::RandomRegular { degree: 4 }, nodes, seed },
        clients: 4,
        repetitions: 2,
        seed,
        ..ExperimentConfig::default()
    }
}

fn matching_on(nodes: usize, seed: u64) -> ProtocolInstance {
    build_instance(&small(nodes, seed)).unwrap()
}

#[test]
fn no_match_clears_every_variable() {
    let inst = ProtocolInstance::matching(Arc::new(GraphTopology::path(4).unwrap()));
    let s = gen_initial(InitialMode::NoMatch, &inst, 0).unwrap();
    assert_eq!(s.values().len(), 8);
    for j in 0..4 {
        assert_eq!(s.get(n(j), P), Value::Null);
        assert_eq!(s.get(n(j), M), Value::Bool(false));
    }
}

#[test]
fn random_match_is_seeded_and_in_domain() {
    let inst = matching_on(50, 1);
    let a = gen_initial(InitialMode::RandomMatch, &inst, 9).unwrap();
    let b = gen_initial(InitialMode::RandomMatch, &inst, 9).unwrap();
    let c = gen_initial(InitialMode::RandomMatch, &inst, 10).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    for j in 0..50 {
        assert!(matches!(a.get(n(j), P), Value::Null | Value::Node(NodeId(0..=49))));
        assert!(matches!(a.get(n(j), M), Value::Bool(_)));
    }
}

#[test]
fn perturbed_match_changes_at_most_the_fraction() {
    let inst = matching_on(100, 3);
    let legit = legitimate_state(&inst, 5).unwrap();
    assert!(matching::matching_invariant(inst.topology(), &legit));
    let s = gen_initial(InitialMode::PerturbedMatch { fraction: 0.1 }, &inst, 5).unwrap();
    assert_eq!(s, gen_initial(InitialMode::PerturbedMatch { fraction: 0.1 }, &inst, 5).unwrap());
    let changed = s.differing_nodes(&legit).len();
    assert!(changed <= 10, "{changed} nodes differ");
    assert!(matching::matched_count(inst.topology(), &s) > 0);
}

#[test]
fn zero_perturbation_leaves_a_legitimate_state() {
    let inst = matching_on(40, 2);
    let legit = legitimate_state(&inst, 1).unwrap();
    let mut s = legit.clone();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
    assert!(kvstab_harness::perturb(&inst, &mut s, 0.0, &mut rng).is_empty());
    assert_eq!(s, legit);
}

#[test]
fn token_ring_initial_states() {
    let inst = ProtocolInstance::token_ring(6, 7).unwrap();
    assert!(gen_initial(InitialMode::NoMatch, &inst, 0).is_err());
    let legit = legitimate_state(&inst, 3).unwrap();
    assert!(token_ring::token_invariant(&legit, 7));
    let r = gen_initial(InitialMode::RandomMatch, &inst, 3).unwrap();
    assert!(r.values().iter().all(|v| matches!(v, Value::Int(0..=6))));
}

#[test]
fn validator_accepts_maximal_matchings() {
    let topo = GraphTopology::path(4).unwrap();
    let v = |p: Option<u32>, m: bool| [p.map_or(Value::Null, |u| Value::Node(n(u))), Value::Bool(m)];
    let state = |nodes: &[[Value; 2]]| GlobalState::new(2, nodes.concat());
    let good = state(&[v(Some(1), true), v(Some(0), true), v(Some(3), true), v(Some(2), true)]);
    assert_eq!(check_maximal_matching(&topo, &good), Ok(()));
    let middle = state(&[v(None, false), v(Some(2), true), v(Some(1), true), v(None, false)]);
    assert_eq!(check_maximal_matching(&topo, &middle), Ok(()));
}

#[test]
fn validator_names_each_flaw() {
    let topo = GraphTopology::path(4).unwrap();
    let v = |p: Option<u32>, m: bool| [p.map_or(Value::Null, |u| Value::Node(n(u))), Value::Bool(m)];
    let state = |nodes: &[[Value; 2]]| GlobalState::new(2, nodes.concat());
    let cases = [
        (
            state(&[v(Some(2), false), v(None, false), v(None, false), v(None, false)]),
            MatchingFlaw::NotANeighbor { node: n(0) },
        ),
        (
            state(&[v(Some(1), false), v(None, false), v(None, false), v(None, false)]),
            MatchingFlaw::Unreciprocated { node: n(0) },
        ),
        (
            state(&[v(Some(1), true), v(Some(0), false), v(Some(3), true), v(Some(2), true)]),
            MatchingFlaw::FlagMismatch { node: n(1) },
        ),
        (
            state(&[v(Some(1), true), v(Some(0), true), v(None, false), v(None, false)]),
            MatchingFlaw::UnmatchedEdge { a: n(2), b: n(3) },
        ),
    ];
    for (s, flaw) in cases {
        assert_eq!(check_maximal_matching(&topo, &s), Err(flaw));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The independent checker and the protocol's invariant agree.
    #[test]
    fn validator_agrees_with_invariant(seed in 0u64..1000, nodes in 4usize..9) {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let topo = GraphTopology::gnp(nodes, 0.5, &mut rng).unwrap();
        let inst = ProtocolInstance::matching(Arc::new(topo.clone()));
        let state = kvstab_harness::random_state(&inst, &mut rng);
        prop_assert_eq!(check_maximal_matching(&topo, &state).is_ok(), matching::matching_invariant(&topo, &state));
        let legit = legitimate_state(&inst, seed).unwrap();
        prop_assert!(check_maximal_matching(&topo, &legit).is_ok());
    }
}

#[test]
fn config_round_trips_through_toml() {
    let text = r#"
        id = "table1"
        quorum = "N3R2W2"
        lme = false
        clients = 30
        latency_ms = 2.5
        repetitions = 5
        seed = 11
        mode = "threaded"
        protocol = { kind = "matching" }
        initial = { kind = "perturbed-match", fraction = 0.2 }
        [topology]
        kind = "gnp"
        p = 0.01
        nodes = 500
        seed = 4
    "#;
    let c = ExperimentConfig::from_toml_str(text).unwrap();
    assert_eq!(c.quorum.label(), "R2W2");
    assert_eq!(c.initial, InitialMode::PerturbedMatch { fraction: 0.2 });
    assert_eq!(c.topology.generator, Generator::Gnp { p: 0.01 });
    assert_eq!(c.mode, RunMode::Threaded);
    let again = ExperimentConfig::from_toml_str(&toml::to_string(&c).unwrap()).unwrap();
    assert_eq!(again, c);
    let defaults = ExperimentConfig::from_toml_str("").unwrap();
    assert_eq!(defaults, ExperimentConfig::default());
}

#[test]
fn invalid_configs_are_rejected() {
    let base = ExperimentConfig::default();
    let bad = [
        ExperimentConfig { repetitions: 0, ..base.clone() },
        ExperimentConfig { initial: InitialMode::PerturbedMatch { fraction: 0.0 }, ..base.clone() },
        ExperimentConfig { initial: InitialMode::PerturbedMatch { fraction: 1.5 }, ..base.clone() },
        ExperimentConfig { clients: 0, ..base.clone() },
        ExperimentConfig {
            topology: TopologyConfig { generator: Generator::RandomRegular { degree: 3 }, nodes: 5, seed: 0 },
            clients: 1,
            ..base.clone()
        },
        ExperimentConfig { protocol: ProtocolChoice::TokenRing { k: 5 }, ..base.clone() },
        ExperimentConfig { latency_ms: -1.0, ..base.clone() },
    ];
    for c in bad {
        assert!(c.validate().is_err(), "{c:?}");
    }
    assert!(ExperimentConfig::from_toml_str("repetitions = 0").is_err());
    assert!(ExperimentConfig::from_toml_str("quorum = \"R4W1\"").is_err());
}

#[test]
fn cli_strings_parse() {
    assert_eq!("token-ring:5".parse::<ProtocolChoice>().unwrap(), ProtocolChoice::TokenRing { k: 5 });
    assert_eq!("random-regular:3".parse::<Generator>().unwrap(), Generator::RandomRegular { degree: 3 });
    assert_eq!("perturbed-match".parse::<InitialMode>().unwrap(), InitialMode::PerturbedMatch { fraction: 0.1 });
    assert!("gnp:x".parse::<Generator>().is_err());
    assert!("star".parse::<Generator>().is_err());
}

#[test]
fn topology_hash_identifies_the_graph() {
    let cfg = TopologyConfig { generator: Generator::RandomRegular { degree: 4 }, nodes: 100, seed: 1 };
    let a = build_topology(&cfg).unwrap();
    let b = build_topology(&cfg).unwrap();
    let c = build_topology(&TopologyConfig { seed: 2, ..cfg }).unwrap();
    assert_eq!(topology_hash(&a), topology_hash(&b));
    assert_ne!(topology_hash(&a), topology_hash(&c));
    assert_eq!(topology_hash(&a).len(), 64);
}

#[test]
fn repetition_seeds_are_shared_across_variants() {
    let a = small(60, 3);
    let b = ExperimentConfig { quorum: "R2W2".parse().unwrap(), lme: false, ..a.clone() };
    let ra = run_experiment(&a).unwrap();
    let rb = run_experiment(&b).unwrap();
    for (x, y) in ra.runs.iter().zip(&rb.runs) {
        assert_eq!((x.seed, x.initial_seed), (y.seed, y.initial_seed));
        assert_eq!((x.initial_seed, x.seed), repetition_seeds(3, x.repetition));
    }
    assert_ne!(ra.runs[0].seed, ra.runs[1].seed);
}

#[test]
fn experiment_report_is_complete() {
    let report = run_experiment(&small(80, 4)).unwrap();
    assert_eq!(report.runs.len(), 2);
    assert!(!report.partial);
    assert_eq!(report.summary.converged_runs, 2);
    for run in &report.runs {
        assert!(run.oracle_passed());
    }
    let mean = report.mean_convergence_time_s().unwrap();
    let (lo, hi) = (report.summary.min_convergence_time_s.unwrap(), report.summary.max_convergence_time_s.unwrap());
    assert!(lo <= mean && mean <= hi);
    assert_eq!(report.provenance.nodes, 80);
    assert_eq!(speedup(&report, &report), Some(1.0));
}

#[test]
fn time_limit_marks_report_partial() {
    let c = ExperimentConfig { max_time_s: 0.001, ..small(80, 4) };
    let report = run_experiment(&c).unwrap();
    assert!(report.partial);
    assert_eq!(report.summary.mean_convergence_time_s, None);
}

#[test]
fn report_csv_has_the_fixed_schema() {
    let report = run_experiment(&small(40, 6)).unwrap();
    let mut buf = Vec::new();
    write_report_csv(&mut buf, &[report]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), REPORT_COLUMNS.join(","));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), REPORT_COLUMNS.len());
    assert_eq!(&row[..7], ["small", "matching", "40", "N3R1W1", "true", "4", "0"]);
    assert_eq!(lines.count(), 1);
}

#[test]
fn discrete_event_experiments_are_bit_identical() {
    let c = ExperimentConfig { lme: false, parallel: true, ..small(60, 8) };
    let produce = || {
        let mut events = Vec::new();
        let report = run_experiment_logged(&c, Some(&mut events)).unwrap();
        let mut csv = Vec::new();
        write_report_csv(&mut csv, &[report]).unwrap();
        (csv, events)
    };
    let serial = {
        let c = ExperimentConfig { parallel: false, ..c.clone() };
        let mut events = Vec::new();
        let report = run_experiment_logged(&c, Some(&mut events)).unwrap();
        let mut csv = Vec::new();
        write_report_csv(&mut csv, &[report]).unwrap();
        (csv, events)
    };
    assert_eq!(produce(), produce());
    assert_eq!(produce(), serial);
}

#[test]
fn pattern_ends_at_the_final_matching() {
    let c = ExperimentConfig { repetitions: 1, ..small(100, 2) };
    let report = convergence_pattern(&c, 5.0).unwrap();
    let run = &report.runs[0];
    let series = &run.metrics.matched_series;
    assert!(series.len() > 2);
    let inst = build_instance(&c).unwrap();
    let expected = matching::matched_count(inst.topology(), &run.metrics.final_state) as f64 / 100.0;
    assert_eq!(series.last().unwrap().1, expected);
    assert!(series.windows(2).all(|w| w[0].0 < w[1].0));
    let token = ExperimentConfig {
        protocol: ProtocolChoice::TokenRing { k: 12 },
        topology: TopologyConfig { generator: Generator::Ring, nodes: 10, seed: 0 },
        ..c
    };
    assert!(convergence_pattern(&token, 5.0).is_err());
}

#[test]
fn perturbed_start_begins_mostly_matched() {
    let c =
        ExperimentConfig { repetitions: 1, initial: InitialMode::PerturbedMatch { fraction: 0.1 }, ..small(200, 5) };
    let report = convergence_pattern(&c, 1.0).unwrap();
    let first = report.runs[0].metrics.matched_series[0].1;
    assert!(first > 0.5 && first < 1.0, "{first}");
}

#[test]
fn dominance_counts_shared_times() {
    let a = [(0, 0.1), (10, 0.5), (20, 0.9)];
    let b = [(0, 0.1), (10, 0.6), (30, 1.0)];
    assert_eq!(dominance(&a, &b), Some(0.5));
    assert_eq!(dominance(&a, &[(5, 0.0)]), None);
}

#[test]
fn sweep_names_values_and_shares_seeds() {
    let base = small(60, 9);
    let reports = sweep(&base, Dimension::Clients, &["2".into(), "6".into()], None).unwrap();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[0].config().id, "small-clients=2");
    assert_eq!(reports[1].config().clients, 6);
    assert_eq!(reports[0].runs[0].seed, reports[1].runs[0].seed);
    assert!(sweep(&base, Dimension::Size, &[], None).is_err());
    assert_eq!(with_value(&base, Dimension::Quorum, "R1W3").unwrap().quorum.label(), "R1W3");
    assert_eq!(with_value(&base, Dimension::Latency, "0.5").unwrap().latency_ms, 0.5);
    assert!(with_value(&base, Dimension::Size, "3").is_err());
}

#[test]
fn sizes_all_converge_to_maximal_matchings() {
    let base = ExperimentConfig { repetitions: 1, ..small(50, 12) };
    let reports = sweep(&base, Dimension::Size, &["50".into(), "120".into(), "200".into()], None).unwrap();
    for r in &reports {
        assert!(r.runs.iter().all(|run| run.oracle_passed()), "{}", r.config().id);
    }
}

#[test]
fn token_ring_experiment_reaches_its_invariant() {
    let c = ExperimentConfig {
        protocol: ProtocolChoice::TokenRing { k: 8 },
        topology: TopologyConfig { generator: Generator::Ring, nodes: 8, seed: 0 },
        quorum: "R2W2".parse().unwrap(),
        clients: 2,
        ..small(8, 0)
    };
    let report = run_experiment(&c).unwrap();
    assert!(report.runs.iter().all(|r| r.metrics.converged && !r.oracle_checked));
}

#[test]
fn threaded_mode_runs() {
    let c =
        ExperimentConfig { mode: RunMode::Threaded, repetitions: 1, latency_ms: 0.1, max_time_s: 60.0, ..small(30, 1) };
    let report = run_experiment(&c).unwrap();
    assert!(report.runs[0].oracle_passed());
}

#[test]
fn verify_summary_for_small_token_ring() {
    let s = verify_instance(&ProtocolInstance::token_ring(3, 3).unwrap(), "ring").unwrap();
    assert_eq!(s.states, 27);
    assert!(s.stabilization.passed());
    assert!(!s.silence.passed());
    assert_eq!(s.minimal_contained_k, Some(5));
    let s = verify_instance(&ProtocolInstance::token_ring(4, 2).unwrap(), "ring").unwrap();
    assert!(!s.stabilization.passed());
    assert_eq!(s.recovery, None);
    let m = verify_instance(&ProtocolInstance::matching(Arc::new(GraphTopology::path(3).unwrap())), "path").unwrap();
    assert!(m.silence.passed());
}
