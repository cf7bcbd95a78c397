//! Regression corpus for chain merges: a queried chain whose hops ride the
//! anchor's designated chain in the fast run. The decision must still land
//! exactly on the knowledge threshold there.

use bcm_core::causality::{self, GeneralNode};
use bcm_core::coordination::{knows_precedence, queryable, recognized_nodes};
use bcm_core::corpus::{self, Sampler};
use bcm_core::oracle::{enumerate_runs, knows_among, EnumerationBudget, ThreeValued};
use bcm_core::state::NodeId;
use bcm_core::timing::{fast_horizon, fast_run, fast_timing, DeliveryCondition};

#[test]
fn merged_chains_keep_exact_verdicts() {
    let mut merges = 0;
    // Seeds known to produce dense mutual-channel nets where chains collide.
    for seed in [0u64, 1, 2, 3, 4, 5, 6, 7] {
        let mut s = Sampler::new(0xBEEF ^ seed);
        let net = corpus::random_net(&mut s);
        let externals = corpus::random_externals(&mut s, &net);
        let run = corpus::random_run(&mut s, net.clone(), &externals, 12);
        let observers: Vec<NodeId> = run
            .node_ids()
            .into_iter()
            .filter(|id| run.time(*id).is_some_and(|t| t > 0))
            .collect();
        if observers.is_empty() {
            continue;
        }
        let observer = observers[(s.next_u64() % observers.len() as u64) as usize];
        let nodes = recognized_nodes(&run, observer, 3).unwrap();
        let queryables: Vec<&GeneralNode> = nodes.iter().filter(|n| queryable(&run, n)).collect();

        let mut runs_cache: Option<Vec<bcm_core::Run>> = None;
        for anchor in queryables.iter().take(4) {
            let Ok(ft) = fast_timing(&run, observer, anchor, 0) else {
                continue;
            };
            if ft.suffix.is_singleton() {
                continue;
            }
            let horizon = fast_horizon(&run, &ft, 12);
            let Ok(fr) = fast_run(&run, observer, anchor, 0, horizon) else {
                continue;
            };
            for target in queryables.iter().take(16) {
                if target.base == anchor.base && target.path == anchor.path {
                    continue;
                }
                // Does the target's chain ride a designated delivery?
                let Some(mut cur) = fr.run.find(&target.base) else {
                    continue;
                };
                let mut rides = false;
                let mut resolved = true;
                for hop in target.path.hops().windows(2) {
                    if cur.index == 0 {
                        resolved = false;
                        break;
                    }
                    if fr.conditions.get(&(cur.proc, cur.index, hop[1]))
                        == Some(&DeliveryCondition::DesignatedUpper)
                    {
                        rides = true;
                    }
                    let Some(d) = fr.run.delivery_of(cur, hop[1]) else {
                        resolved = false;
                        break;
                    };
                    let Some(next) = fr.run.node_at_time(hop[1], d.deliver_time) else {
                        resolved = false;
                        break;
                    };
                    cur = next;
                }
                if !rides || !resolved {
                    continue;
                }
                merges += 1;

                // The decided maximum must equal the fast run's realized
                // lead even when the chains share deliveries.
                let v = knows_precedence(&run, observer, anchor, target, 0).unwrap();
                let w = v.max_weight.expect("target chain is reachable");
                let t1 = causality::time_of_general(&fr.run, anchor).unwrap() as i64;
                let t2 = causality::time_of_general(&fr.run, target).unwrap() as i64;
                assert_eq!(t2 - t1, w, "seed {seed}: merge broke the witness equality");

                // Ground truth brackets the threshold exactly.
                if runs_cache.is_none() {
                    let slack = 4;
                    let wide = EnumerationBudget {
                        horizon: 12 + slack,
                        max_runs: 40_000,
                        external_slack: slack,
                    };
                    runs_cache = enumerate_runs(net.clone(), &externals, &wide).ok();
                }
                if let Some(runs) = &runs_cache {
                    let obs_state = run.node(observer).unwrap();
                    let at_w = knows_among(runs.iter(), &obs_state, anchor, target, w);
                    assert_ne!(
                        at_w.verdict,
                        ThreeValued::False,
                        "seed {seed}: decision overclaims at {w}"
                    );
                    let above = knows_among(runs.iter(), &obs_state, anchor, target, w + 1);
                    assert_ne!(
                        above.verdict,
                        ThreeValued::True,
                        "seed {seed}: decision underclaims at {}",
                        w + 1
                    );
                }
            }
        }
    }
    assert!(merges >= 4, "only {merges} merged-chain instances detected");
}
