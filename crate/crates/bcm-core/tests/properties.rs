//! Cross-module invariants checked over randomized desk-scale scenarios.

use std::collections::{BTreeMap, BTreeSet};

use bcm_core::causality::{self, GeneralNode};
use bcm_core::coordination::recognized_nodes;
use bcm_core::corpus::{self, Sampler};
use bcm_core::graph::{build_basic, build_extended, build_local, GraphNode};
use bcm_core::network::ProcPath;
use bcm_core::oracle::{enumerate_runs, EnumerationBudget};
use bcm_core::sim::{validate, Run};
use bcm_core::state::NodeId;
use bcm_core::timing::{
    fast_horizon, fast_run, fast_timing, is_valid_timing, run_by_timing, slow_timing,
    TimingFunction,
};
use bcm_core::zigzag::{validate_zigzag, zigzag_from_path};
use proptest::prelude::*;

fn budget(horizon: u32) -> EnumerationBudget {
    EnumerationBudget {
        horizon,
        max_runs: 30_000,
        external_slack: 0,
    }
}

/// A manageable random scenario: resamples until the enumeration fits the
/// budget.
fn scenario(seed: u64) -> (Run, Vec<Run>) {
    let mut s = Sampler::new(seed);
    loop {
        let net = corpus::random_net(&mut s);
        let externals = corpus::random_externals(&mut s, &net);
        let horizon = s.range(8, 12) as u32;
        match enumerate_runs(net.clone(), &externals, &budget(horizon)) {
            Ok(runs) if !runs.is_empty() => {
                let run = corpus::random_run(&mut s, net, &externals, horizon);
                return (run, runs);
            }
            _ => continue,
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_runs_validate(seed in 0u64..1_000) {
        let mut s = Sampler::new(seed);
        let net = corpus::random_net(&mut s);
        let externals = corpus::random_externals(&mut s, &net);
        let run = corpus::random_run(&mut s, net, &externals, 12);
        prop_assert!(validate(&run).is_empty());
    }

    #[test]
    fn happens_before_is_a_partial_order(seed in 0u64..1_000) {
        let mut s = Sampler::new(seed);
        let net = corpus::random_net(&mut s);
        let externals = corpus::random_externals(&mut s, &net);
        let run = corpus::random_run(&mut s, net, &externals, 12);
        let ids = run.node_ids();
        for &a in &ids {
            prop_assert!(causality::happens_before(&run, a, a).unwrap());
            for &b in &ids {
                let ab = causality::happens_before(&run, a, b).unwrap();
                if ab && a != b {
                    // Antisymmetry via timestamps.
                    prop_assert!(run.time(a).unwrap() <= run.time(b).unwrap());
                    prop_assert!(!causality::happens_before(&run, b, a).unwrap());
                }
                for &c in &ids {
                    if ab && causality::happens_before(&run, b, c).unwrap() {
                        prop_assert!(causality::happens_before(&run, a, c).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn path_arithmetic_is_additive(seed in 0u64..1_000) {
        let mut s = Sampler::new(seed);
        let net = corpus::random_net(&mut s);
        // Random walks along channels.
        let start = bcm_core::ProcId(s.range(0, net.proc_count() as u64 - 1) as u32);
        let mut hops = vec![start];
        for _ in 0..4 {
            let out = net.out_channels(*hops.last().unwrap());
            if out.is_empty() {
                break;
            }
            hops.push(*s.pick(out));
        }
        let path = ProcPath::new(hops).unwrap();
        for cut in 0..path.hop_count() {
            let front = path.prefix(cut);
            let back = path.suffix(cut);
            let whole = front.compose(&back).unwrap();
            prop_assert_eq!(&whole, &path);
            prop_assert_eq!(
                net.path_lower(&front).unwrap() + net.path_lower(&back).unwrap(),
                net.path_lower(&path).unwrap()
            );
            prop_assert_eq!(
                net.path_upper(&front).unwrap() + net.path_upper(&back).unwrap(),
                net.path_upper(&path).unwrap()
            );
        }
        prop_assert!(net.path_lower(&path).unwrap() <= net.path_upper(&path).unwrap());
        prop_assert!(net.path_lower(&path).unwrap() as usize >= path.hop_count());
    }
}

#[test]
fn bounds_edges_hold_in_their_run() {
    // Every edge weight of the basic graph lower-bounds the realized gap.
    for seed in 0..40u64 {
        let mut s = Sampler::new(seed);
        let net = corpus::random_net(&mut s);
        let externals = corpus::random_externals(&mut s, &net);
        let run = corpus::random_run(&mut s, net, &externals, 12);
        let g = build_basic(&run).unwrap();
        for (u, v, w) in g.edges() {
            let (GraphNode::Basic(a), GraphNode::Basic(b)) = (u, v) else {
                unreachable!()
            };
            let ta = run.time(a).unwrap() as i64;
            let tb = run.time(b).unwrap() as i64;
            assert!(
                ta + w <= tb,
                "edge {a:?} -> {b:?} weight {w} vs times {ta}, {tb}"
            );
        }
    }
}

#[test]
fn longest_paths_bound_gaps_across_same_graph_runs() {
    // Runs with the same node structure satisfy every path constraint of
    // the shared graph; the slow run attains the bound exactly.
    for seed in [3u64, 7, 11, 19] {
        let (run, all) = scenario(seed);
        let g = build_basic(&run).unwrap();
        let signature: BTreeMap<NodeId, _> = run
            .node_ids()
            .iter()
            .map(|id| (*id, run.node(*id).unwrap()))
            .collect();
        let same_graph: Vec<&Run> = all
            .iter()
            .filter(|r| {
                let sig: BTreeMap<NodeId, _> = r
                    .node_ids()
                    .iter()
                    .map(|id| (*id, r.node(*id).unwrap()))
                    .collect();
                sig == signature
            })
            .collect();
        assert!(!same_graph.is_empty());
        let ids = run.node_ids();
        for &from in &ids {
            let dist = g.longest_from(GraphNode::Basic(from)).unwrap();
            for &to in &ids {
                let Some(w) = g.distance(&dist, GraphNode::Basic(to)).unwrap() else {
                    continue;
                };
                for r in &same_graph {
                    let tf = r.find(&run.node(from).unwrap()).unwrap();
                    let tt = r.find(&run.node(to).unwrap()).unwrap();
                    let gap = r.time(tt).unwrap() as i64 - r.time(tf).unwrap() as i64;
                    assert!(gap >= w, "path weight {w} exceeded gap {gap}");
                }
            }
        }
    }
}

#[test]
fn pasts_are_stable_across_indistinguishable_runs() {
    for seed in [5u64, 13, 29] {
        let (run, all) = scenario(seed);
        for observer in run.node_ids() {
            if run.time(observer) == Some(0) {
                continue;
            }
            let node = run.node(observer).unwrap();
            let mine: BTreeMap<NodeId, _> = causality::past(&run, observer)
                .unwrap()
                .into_iter()
                .map(|id| (id, run.node(id).unwrap()))
                .collect();
            for r in &all {
                let Some(there) = r.find(&node) else { continue };
                let theirs: BTreeMap<NodeId, _> = causality::past(r, there)
                    .unwrap()
                    .into_iter()
                    .map(|id| (id, r.node(id).unwrap()))
                    .collect();
                assert_eq!(mine, theirs, "pasts must be a function of the state");
            }
        }
    }
}

#[test]
fn resolution_times_stay_within_path_bounds() {
    for seed in 0..30u64 {
        let mut s = Sampler::new(seed);
        let net = corpus::random_net(&mut s);
        let externals = corpus::random_externals(&mut s, &net);
        let run = corpus::random_run(&mut s, net.clone(), &externals, 12);
        for id in run.node_ids() {
            let base = run.node(id).unwrap();
            let mut path = ProcPath::singleton(id.proc);
            for _ in 0..3 {
                let out = net.out_channels(path.last());
                if out.is_empty() {
                    break;
                }
                path = path.extend(*s.pick(out));
            }
            if path.is_singleton() {
                continue;
            }
            let node = GeneralNode::new(base.clone(), path.clone()).unwrap();
            if let Some(t) = causality::time_of_general(&run, &node) {
                let t0 = run.time(id).unwrap();
                assert!(t >= t0 + net.path_lower(&path).unwrap());
                assert!(t <= t0 + net.path_upper(&path).unwrap());
            }
        }
    }
}

#[test]
fn local_and_extended_graphs_agree_on_basic_edges() {
    for seed in 0..20u64 {
        let mut s = Sampler::new(seed);
        let net = corpus::random_net(&mut s);
        let externals = corpus::random_externals(&mut s, &net);
        let run = corpus::random_run(&mut s, net, &externals, 12);
        let g = build_basic(&run).unwrap();
        for observer in run.node_ids() {
            let local = build_local(&run, observer).unwrap();
            for (u, v, w) in local.edges() {
                assert_eq!(g.edge_weight(u, v), Some(w));
            }
            let ext = build_extended(&run, observer).unwrap();
            let ext_basic: Vec<_> = ext
                .edges()
                .into_iter()
                .filter(|(u, v, _)| {
                    matches!(u, GraphNode::Basic(_)) && matches!(v, GraphNode::Basic(_))
                })
                .collect();
            assert_eq!(ext_basic, local.edges());
            // Channel count equals aux-to-aux edge count.
            let aux_aux = ext
                .edges()
                .into_iter()
                .filter(|(u, v, _)| {
                    matches!(u, GraphNode::Aux(_)) && matches!(v, GraphNode::Aux(_))
                })
                .count();
            assert_eq!(aux_aux, run.net().channels().count());
        }
    }
}

#[test]
fn extended_paths_bound_gaps_across_indistinguishable_runs() {
    // The strongest derivable constraints (longest paths between past
    // nodes) hold in every run the observer cannot distinguish.
    for seed in [2u64, 17, 23] {
        let (run, all) = scenario(seed);
        for observer in run.node_ids() {
            if run.time(observer) == Some(0) {
                continue;
            }
            let obs_node = run.node(observer).unwrap();
            let g = build_extended(&run, observer).unwrap();
            let past: Vec<NodeId> = g.basic_nodes().collect();
            for &from in &past {
                let dist = g.longest_from(GraphNode::Basic(from)).unwrap();
                for &to in &past {
                    let Some(w) = g.distance(&dist, GraphNode::Basic(to)).unwrap() else {
                        continue;
                    };
                    for r in all.iter().filter(|r| r.find(&obs_node).is_some()) {
                        let tf = r.find(&run.node(from).unwrap()).expect("past node appears");
                        let tt = r.find(&run.node(to).unwrap()).expect("past node appears");
                        let gap = r.time(tt).unwrap() as i64 - r.time(tf).unwrap() as i64;
                        assert!(
                            gap >= w,
                            "extended path weight {w} exceeded gap {gap} (seed {seed})"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn synthesized_timings_keep_node_identities() {
    // Nodes kept by a re-timed run resolve to the same canonical states;
    // chains into dropped territory disappear.
    for seed in 0..25u64 {
        let mut s = Sampler::new(seed);
        let net = corpus::random_net(&mut s);
        let externals = corpus::random_externals(&mut s, &net);
        let run = corpus::random_run(&mut s, net, &externals, 12);
        if run.truncated() {
            continue;
        }
        let g = build_basic(&run).unwrap();
        let ids = run.node_ids();
        let target = ids[(s.next_u64() % ids.len() as u64) as usize];
        let target_node = GeneralNode::basic(run.node(target).unwrap());
        let timing = slow_timing(&run, &target_node).unwrap();
        let keep: BTreeSet<NodeId> = g
            .precedence_set(GraphNode::Basic(target))
            .unwrap()
            .into_iter()
            .map(|n| match n {
                GraphNode::Basic(id) => id,
                GraphNode::Aux(_) => unreachable!(),
            })
            .collect();
        let Ok(rebuilt) = run_by_timing(&run, &keep, &timing) else {
            // Dropped-obligation conflicts are reported, not mis-built.
            continue;
        };
        assert!(validate(&rebuilt).is_empty());
        for node in recognized_nodes(&run, target, 2).unwrap() {
            let Some(in_run) = causality::resolve_id(&run, &node) else {
                continue;
            };
            match causality::resolve(&rebuilt, &node) {
                Some(found) => {
                    assert_eq!(found, run.node(in_run).unwrap());
                    assert!(keep.contains(&in_run) || in_run.index == 0);
                }
                None => {
                    assert!(
                        !keep.contains(&in_run) || rebuilt.truncated(),
                        "kept chains must resolve in the rebuilt run"
                    );
                }
            }
        }
        // Non-initial kept nodes appear exactly at their assigned times.
        for &id in &keep {
            if id.index == 0 {
                continue;
            }
            let found = rebuilt
                .find(&run.node(id).unwrap())
                .expect("kept node appears");
            assert_eq!(rebuilt.time(found), timing.basic(id));
        }
    }
}

#[test]
fn fast_runs_are_indistinguishable_and_respect_timing() {
    for seed in 0..15u64 {
        let mut s = Sampler::new(seed);
        let net = corpus::random_net(&mut s);
        let externals = corpus::random_externals(&mut s, &net);
        let run = corpus::random_run(&mut s, net, &externals, 12);
        let candidates: Vec<NodeId> = run
            .node_ids()
            .into_iter()
            .filter(|id| run.time(*id).is_some_and(|t| t > 0))
            .collect();
        if candidates.is_empty() {
            continue;
        }
        let observer = candidates[(s.next_u64() % candidates.len() as u64) as usize];
        let nodes = recognized_nodes(&run, observer, 2).unwrap();
        let anchors: Vec<&GeneralNode> = nodes
            .iter()
            .filter(|n| {
                causality::resolve_id(&run, n)
                    .and_then(|id| run.time(id))
                    .is_some_and(|t| t > 0)
            })
            .collect();
        if anchors.is_empty() {
            continue;
        }
        let anchor = anchors[(s.next_u64() % anchors.len() as u64) as usize];
        let gamma = s.range(0, 3) as u32;
        let ft = fast_timing(&run, observer, anchor, gamma).unwrap();
        assert!(is_valid_timing(&ft.graph, &ft.timing).unwrap());
        let horizon = fast_horizon(&run, &ft, 8);
        let fr = fast_run(&run, observer, anchor, gamma, horizon).unwrap();
        assert!(validate(&fr.run).is_empty());
        // Indistinguishable: the observer's canonical state appears.
        let obs_node = run.node(observer).unwrap();
        let there = fr.run.find(&obs_node).expect("fast run keeps the observer");
        // Identical pasts as canonical node sets.
        let mine: BTreeMap<NodeId, _> = causality::past(&run, observer)
            .unwrap()
            .into_iter()
            .map(|id| (id, run.node(id).unwrap()))
            .collect();
        let theirs: BTreeMap<NodeId, _> = causality::past(&fr.run, there)
            .unwrap()
            .into_iter()
            .map(|id| (id, fr.run.node(id).unwrap()))
            .collect();
        assert_eq!(mine, theirs);
        // Past nodes occur at their assigned times.
        for id in causality::past(&run, observer).unwrap() {
            if id.index == 0 {
                continue;
            }
            let found = fr.run.find(&run.node(id).unwrap()).unwrap();
            assert_eq!(fr.run.time(found), fr.timing.timing.basic(id));
        }
    }
}

#[test]
fn certificates_from_random_walks_hold_everywhere() {
    // Zigzags extracted from random graph walks stay valid in the source
    // run and bound gaps in every run realizing the same node structure.
    let mut built = 0;
    for seed in 0..60u64 {
        let mut s = Sampler::new(seed);
        let net = corpus::random_net(&mut s);
        let externals = corpus::random_externals(&mut s, &net);
        let run = corpus::random_run(&mut s, net, &externals, 12);
        let g = build_basic(&run).unwrap();
        let ids = run.node_ids();
        let start = ids[(s.next_u64() % ids.len() as u64) as usize];
        // Random walk over graph edges.
        let mut walk = vec![start];
        for _ in 0..s.range(0, 5) {
            let cur = *walk.last().unwrap();
            let nexts: Vec<NodeId> = g
                .edges()
                .into_iter()
                .filter(|(u, _, _)| *u == GraphNode::Basic(cur))
                .map(|(_, v, _)| match v {
                    GraphNode::Basic(id) => id,
                    GraphNode::Aux(_) => unreachable!(),
                })
                .collect();
            if nexts.is_empty() {
                break;
            }
            walk.push(*s.pick(&nexts));
        }
        let from = GeneralNode::basic(run.node(walk[0]).unwrap());
        let to = GeneralNode::basic(run.node(*walk.last().unwrap()).unwrap());
        let cert = zigzag_from_path(&run, &g, &walk, &from, &to).unwrap();
        assert!(validate_zigzag(&run, &cert, &from, &to));
        let t_from = run.time(walk[0]).unwrap() as i64;
        let t_to = run.time(*walk.last().unwrap()).unwrap() as i64;
        assert!(t_to - t_from >= cert.weight);
        built += 1;
    }
    assert!(built >= 50, "sampler kept producing scenarios");
}

#[test]
fn knowledge_claims_are_sound_on_random_nets() {
    // Whatever the decision claims to know must hold in every enumerated
    // indistinguishable run. (The complete direction needs enumeration
    // spaces tuned per scenario; the bundled corpus covers it.)
    use bcm_core::coordination::{knows_precedence, queryable, recognized_nodes};
    use bcm_core::oracle::{knows_among, ThreeValued};

    let mut checked = 0;
    let mut seed = 0u64;
    while checked < 40 && seed < 200 {
        seed += 1;
        let mut s = Sampler::new(0xC0FFEE ^ seed);
        let net = corpus::random_net(&mut s);
        let externals = corpus::random_externals(&mut s, &net);
        let horizon = 10;
        let slack = 4;
        let wide = EnumerationBudget {
            horizon: horizon + slack,
            max_runs: 8_000,
            external_slack: slack,
        };
        let Ok(runs) = enumerate_runs(net.clone(), &externals, &wide) else {
            continue;
        };
        let run = corpus::random_run(&mut s, net, &externals, horizon);
        let observers: Vec<NodeId> = run
            .node_ids()
            .into_iter()
            .filter(|id| run.time(*id).is_some_and(|t| t > 0))
            .collect();
        if observers.is_empty() {
            continue;
        }
        let observer = observers[(s.next_u64() % observers.len() as u64) as usize];
        let obs_state = run.node(observer).unwrap();
        let pool: Vec<GeneralNode> = recognized_nodes(&run, observer, 2)
            .unwrap()
            .into_iter()
            .filter(|n| queryable(&run, n))
            .collect();
        if pool.len() < 2 {
            continue;
        }
        for _ in 0..4 {
            let first = s.pick(&pool).clone();
            let second = s.pick(&pool).clone();
            let Ok(verdict) = knows_precedence(&run, observer, &first, &second, 0) else {
                continue;
            };
            let Some(w) = verdict.max_weight else {
                continue;
            };
            // The decided maximum is claimed knowable: no enumerated
            // indistinguishable run may undercut it.
            let truth = knows_among(runs.iter(), &obs_state, &first, &second, w);
            assert_ne!(
                truth.verdict,
                ThreeValued::False,
                "decision overclaims on seed {seed}: weight {w}"
            );
            checked += 1;
        }
    }
    assert!(checked >= 40, "only {checked} soundness checks ran");
}

#[test]
fn valid_timing_accepts_actual_run_times() {
    for seed in 0..20u64 {
        let mut s = Sampler::new(seed);
        let net = corpus::random_net(&mut s);
        let externals = corpus::random_externals(&mut s, &net);
        let run = corpus::random_run(&mut s, net, &externals, 12);
        let g = build_basic(&run).unwrap();
        let mut values = BTreeMap::new();
        for id in run.node_ids() {
            values.insert(GraphNode::Basic(id), run.time(id).unwrap());
        }
        assert!(is_valid_timing(&g, &TimingFunction::new(values)).unwrap());
    }
}
