use std::collections::{BTreeMap, BTreeSet};

use portnav_core::learner::ppo::train_ppo;
use portnav_core::learner::tabular::tabular_q_train;
use portnav_core::learner::{PpoAgent, StartMode, TrainSetup, TrajectoryBatch};
use portnav_core::*;

fn graph(nodes: &[(&str, RoomLabel)], edges: &[(&str, &str)]) -> ScanGraph {
    ScanGraph::new(
        nodes.iter().map(|(id, room)| NodeRecord { id: id.to_string(), room: *room, pos: None, scene: vec![] }).collect(),
        edges.iter().map(|(a, b)| EdgeRecord { a: a.to_string(), b: b.to_string(), dist: 1.0 }).collect(),
    )
    .unwrap()
}

/// A–B, A–C, C–D with a mug that can only live in B's kitchen.
fn fixed_neighbor() -> (ScanGraph, PortableObjectCatalog) {
    let scan = graph(
        &[("A", RoomLabel::Lounge), ("B", RoomLabel::Kitchen), ("C", RoomLabel::Lounge), ("D", RoomLabel::Lounge)],
        &[("A", "B"), ("A", "C"), ("C", "D")],
    );
    let catalog = PortableObjectCatalog::new(BTreeMap::from([("mug".to_string(), BTreeSet::from([RoomLabel::Kitchen]))])).unwrap();
    (scan, catalog)
}

fn setup<'a>(scan: &'a ScanGraph, catalog: &'a PortableObjectCatalog, episodes: usize) -> TrainSetup<'a> {
    TrainSetup {
        scan,
        catalog,
        schedule: ScheduleConfig { horizon: 5, waiting_period: 5, max_interval: None, base_seed: 0 },
        plan: SchemePlan::constant(Scheme::FullyRoutine),
        episodes,
        start: StartMode::Fixed("A".into()),
    }
}

#[test]
fn tabular_learns_to_step_to_fixed_neighbor() {
    let (scan, catalog) = fixed_neighbor();
    let (log, agent) = tabular_q_train(&setup(&scan, &catalog, 200), &TabularConfig { seed: 3, ..Default::default() }).unwrap();
    let engine = Engine::new(&scan, &build_schedule(&scan, &catalog, &setup(&scan, &catalog, 1).schedule, Scheme::FullyRoutine, 0).unwrap(), &StartSpec::Node("A".into())).unwrap();
    let action = agent.greedy(0, 0, &engine.observation().adjacency);
    assert_eq!(scan.id(action), "B");
    assert_eq!(log.episodes.last().unwrap().unique_objects, 1);
}

#[test]
fn tabular_gamma_zero_tracks_immediate_reward() {
    let (scan, catalog) = fixed_neighbor();
    let cfg = TabularConfig { gamma: 0.0, mask_invalid: false, seed: 1, ..Default::default() };
    let (_, agent) = tabular_q_train(&setup(&scan, &catalog, 200), &cfg).unwrap();
    let (a, b, c, d) = (0, 1, 2, 3);
    assert!(agent.q(a, 0, b) > 0.5, "find: {}", agent.q(a, 0, b));
    assert_eq!(agent.q(a, 0, c), 0.0);
    assert!(agent.q(a, 0, a) < 0.0);
    assert!(agent.q(a, 0, d) < 0.0);
}

#[test]
fn training_is_deterministic() {
    let (scan, catalog) = fixed_neighbor();
    let s = setup(&scan, &catalog, 30);
    let cfg = TabularConfig { seed: 9, ..Default::default() };
    assert_eq!(tabular_q_train(&s, &cfg).unwrap().0, tabular_q_train(&s, &cfg).unwrap().0);
    let p = LearnerConfig { seed: 9, hidden: vec![8], ..Default::default() };
    let (l1, a1) = train_ppo(&s, p.clone()).unwrap();
    let (l2, a2) = train_ppo(&s, p).unwrap();
    assert_eq!(l1, l2);
    assert_eq!(a1.to_checkpoint(), a2.to_checkpoint());
}

#[test]
fn zero_episodes_give_empty_log() {
    let (scan, catalog) = fixed_neighbor();
    let s = setup(&scan, &catalog, 0);
    assert!(tabular_q_train(&s, &TabularConfig::default()).unwrap().0.episodes.is_empty());
    let log = train_ppo(&s, LearnerConfig::default()).unwrap().0;
    assert!(log.episodes.is_empty() && log.updates.is_empty());
}

#[test]
fn one_update_favors_rewarded_arm() {
    // Two nodes; from A, hopping to B pays 1 and staying is an invalid -1.
    let cfg = LearnerConfig { seed: 4, ..Default::default() };
    let mut agent = PpoAgent::new(2, cfg.clone()).unwrap();
    let x = vec![0.0, 1.0, 0.0];
    let before = agent.probs(&x)[1];
    let mut batch = TrajectoryBatch::default();
    for _ in 0..32 {
        let (a, logp, v) = agent.sample(&x);
        let ep = TrajectoryBatch {
            observations: vec![x.clone()],
            actions: vec![a],
            rewards: vec![if a == 1 { 1.0 } else { -1.0 }],
            values: vec![v],
            log_probs: vec![logp],
            ..Default::default()
        };
        batch.push_episode(ep, cfg.gamma, cfg.gae_lambda).unwrap();
    }
    assert!(batch.actions.contains(&0) && batch.actions.contains(&1));
    agent.update(&mut batch).unwrap();
    let after = agent.probs(&x)[1];
    assert!(after > before, "{before} -> {after}");
}
