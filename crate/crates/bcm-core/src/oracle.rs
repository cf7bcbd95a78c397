//! Brute-force ground truth: exhaustive enumeration of the environment's
//! choices at desk scale, used to cross-check precedence, knowledge, and
//! protocol decisions.
//!
//! The enumeration is complete only for the bounded space it explores:
//! external inputs range over `[time, time + external_slack]` and runs stop
//! at the horizon. Verdicts are three-valued; a query is `Unknown` when a
//! truncated run leaves a node unresolved, and answers on truncated spaces
//! carry that caveat rather than a claim of full completeness.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::causality::{resolve_id, GeneralNode};
use crate::network::{Network, ProcId};
use crate::sim::{synthesize_run, Delivery, ExternalInput, MessageInstance, Run, SimError};
use crate::state::NodeId;
use std::sync::Arc;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("enumeration exceeded the budget of {0} runs")]
    BudgetExceeded(usize),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Bounds on the enumeration: trace length, run-count cap, and how many
/// extra time slots each external input may shift by.
#[derive(Clone, Copy, Debug)]
pub struct EnumerationBudget {
    pub horizon: u32,
    pub max_runs: usize,
    pub external_slack: u32,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        EnumerationBudget {
            horizon: 14,
            max_runs: 200_000,
            external_slack: 0,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ThreeValued {
    True,
    False,
    Unknown,
}

/// A ground-truth verdict with its exploration statistics. `uncertain`
/// counts runs whose horizon truncation blocked a definite check.
#[derive(Clone, Copy, Debug)]
pub struct OracleAnswer {
    pub verdict: ThreeValued,
    pub runs_checked: usize,
    pub uncertain_runs: usize,
}

struct PendingMsg {
    msg: MessageInstance,
    lo: u32,
    hi: u32,
}

struct Enumerator<'a, F: FnMut(&Run) -> bool> {
    net: Arc<Network>,
    budget: EnumerationBudget,
    emitted: usize,
    stop: bool,
    visit: &'a mut F,
}

impl<'a, F: FnMut(&Run) -> bool> Enumerator<'a, F> {
    /// Explores every delivery interleaving from time `t` on. `self.visit`
    /// returning `false` aborts the walk.
    fn explore(
        &mut self,
        t: u32,
        externals: &[ExternalInput],
        pending: &mut Vec<PendingMsg>,
        deliveries: &mut Vec<Delivery>,
        timelines: &mut Vec<Vec<(u32, u32)>>, // per proc: (time, index); index 0 implicit
    ) -> Result<(), OracleError> {
        if self.stop {
            return Ok(());
        }
        let quiescent = pending.is_empty() && externals.iter().all(|e| e.time < t);
        if t > self.budget.horizon || quiescent {
            self.emitted += 1;
            if self.emitted > self.budget.max_runs {
                return Err(OracleError::BudgetExceeded(self.budget.max_runs));
            }
            let run = synthesize_run(self.net.clone(), self.budget.horizon, externals, deliveries)?;
            debug_assert!(crate::sim::validate(&run).is_empty());
            if !(self.visit)(&run) {
                self.stop = true;
            }
            return Ok(());
        }

        // Deliverable messages at t, in canonical order; forced ones are at
        // their upper bound.
        let mut forced: Vec<usize> = Vec::new();
        let mut optional: Vec<usize> = Vec::new();
        for (i, p) in pending.iter().enumerate() {
            if p.hi == t {
                forced.push(i);
            } else if p.lo <= t && t < p.hi {
                optional.push(i);
            }
        }
        optional.sort_by_key(|&i| {
            (
                pending[i].msg.src,
                pending[i].msg.src_index,
                pending[i].msg.dst,
            )
        });

        let ext_now = externals.iter().filter(|e| e.time == t).count();

        for mask in 0..(1u64 << optional.len()) {
            let mut chosen: Vec<usize> = forced.clone();
            for (bit, &i) in optional.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    chosen.push(i);
                }
            }
            if chosen.is_empty() && ext_now == 0 {
                // No events at t under this choice.
                self.explore(t + 1, externals, pending, deliveries, timelines)?;
            } else {
                chosen.sort_unstable();
                // Apply: remove chosen from pending (descending), record
                // deliveries, grow timelines, spawn FFIP messages.
                let mut removed: Vec<PendingMsg> = Vec::new();
                for &i in chosen.iter().rev() {
                    removed.push(pending.remove(i));
                }
                let mut touched: Vec<ProcId> = removed.iter().map(|p| p.msg.dst).collect();
                touched.extend(externals.iter().filter(|e| e.time == t).map(|e| e.target));
                touched.sort();
                touched.dedup();
                let delivered_count = removed.len();
                for p in &removed {
                    deliveries.push(Delivery {
                        msg: p.msg,
                        deliver_time: t,
                    });
                }
                let mut spawned = 0;
                for &proc in &touched {
                    let new_index = timelines[proc.index()].len() as u32 + 1;
                    timelines[proc.index()].push((t, new_index));
                    for &dst in self.net.out_channels(proc) {
                        let bounds = self.net.bounds(proc, dst).expect("channel exists");
                        pending.push(PendingMsg {
                            msg: MessageInstance {
                                src: proc,
                                src_index: new_index,
                                dst,
                                send_time: t,
                            },
                            lo: t + bounds.lower,
                            hi: t + bounds.upper,
                        });
                        spawned += 1;
                    }
                }
                self.explore(t + 1, externals, pending, deliveries, timelines)?;
                // Undo.
                for _ in 0..spawned {
                    pending.pop();
                }
                for &proc in &touched {
                    timelines[proc.index()].pop();
                }
                for _ in 0..delivered_count {
                    deliveries.pop();
                }
                // Re-insert removed messages at their original indices.
                for (&i, p) in chosen.iter().zip(removed.into_iter().rev()) {
                    pending.insert(i, p);
                }
            }
            if self.stop {
                return Ok(());
            }
        }
        Ok(())
    }
}

/// Visits every valid run over the external-input space (each input shifted
/// by `0..=external_slack`, capped at the horizon) exactly once, in a fixed
/// canonical order. The visitor returning `false` stops the walk early.
pub fn for_each_run<F: FnMut(&Run) -> bool>(
    net: Arc<Network>,
    externals: &[ExternalInput],
    budget: &EnumerationBudget,
    visit: &mut F,
) -> Result<(), OracleError> {
    // Product of external time shifts.
    let mut shifted: Vec<ExternalInput> = externals.to_vec();
    fn ext_product<F: FnMut(&Run) -> bool>(
        e: &mut Enumerator<'_, F>,
        base: &[ExternalInput],
        shifted: &mut Vec<ExternalInput>,
        k: usize,
        slack: u32,
        horizon: u32,
    ) -> Result<(), OracleError> {
        if e.stop {
            return Ok(());
        }
        if k == base.len() {
            let mut pending = Vec::new();
            let mut deliveries = Vec::new();
            let mut timelines = vec![Vec::new(); e.net.proc_count()];
            let externals = shifted.clone();
            return e.explore(1, &externals, &mut pending, &mut deliveries, &mut timelines);
        }
        for shift in 0..=slack {
            let t = base[k].time + shift;
            if t > horizon {
                break;
            }
            shifted[k].time = t;
            ext_product(e, base, shifted, k + 1, slack, horizon)?;
        }
        Ok(())
    }

    let mut e = Enumerator {
        net,
        budget: *budget,
        emitted: 0,
        stop: false,
        visit,
    };
    ext_product(
        &mut e,
        externals,
        &mut shifted,
        0,
        budget.external_slack,
        budget.horizon,
    )
}

/// Collects the full enumeration.
pub fn enumerate_runs(
    net: Arc<Network>,
    externals: &[ExternalInput],
    budget: &EnumerationBudget,
) -> Result<Vec<Run>, OracleError> {
    let mut out = Vec::new();
    for_each_run(net, externals, budget, &mut |r| {
        out.push(r.clone());
        true
    })?;
    Ok(out)
}

/// All enumerated runs in which the observer's canonical state appears —
/// the runs the observer cannot distinguish from its own.
pub fn indistinguishable_runs(
    run: &Run,
    observer: NodeId,
    budget: &EnumerationBudget,
) -> Result<Vec<Run>, OracleError> {
    let node = run.node(observer).expect("observer in run");
    let mut out = Vec::new();
    for_each_run(run.net().clone(), run.externals(), budget, &mut |r| {
        if r.find(&node).is_some() {
            out.push(r.clone());
        }
        true
    })?;
    Ok(out)
}

enum Appearance {
    No,
    Resolved(u32),
    Pending,
}

fn appearance(run: &Run, node: &GeneralNode) -> Appearance {
    match resolve_id(run, node) {
        Some(id) => Appearance::Resolved(run.time(id).expect("resolved node has a time")),
        None => {
            let base_in = run.find(&node.base).is_some();
            if !base_in {
                if run.truncated() {
                    Appearance::Pending
                } else {
                    Appearance::No
                }
            } else if node.base.is_initial() && !node.path.is_singleton() {
                // Initial nodes never send, so no chain ever leaves them.
                Appearance::No
            } else {
                Appearance::Pending
            }
        }
    }
}

/// Ground truth for knowledge of timed precedence at the observer: true iff
/// `first` precedes `second` by at least `x` in every enumerated run the
/// observer cannot distinguish from this one.
pub fn oracle_knows(
    run: &Run,
    observer: NodeId,
    first: &GeneralNode,
    second: &GeneralNode,
    x: i64,
    budget: &EnumerationBudget,
) -> Result<OracleAnswer, OracleError> {
    let obs_node = run.node(observer).expect("observer in run");
    let mut checked = 0;
    let mut uncertain = 0;
    let mut refuted = false;
    for_each_run(run.net().clone(), run.externals(), budget, &mut |r| {
        if r.find(&obs_node).is_none() {
            return true;
        }
        checked += 1;
        match (appearance(r, first), appearance(r, second)) {
            (Appearance::Resolved(t1), Appearance::Resolved(t2)) => {
                if (t1 as i64) + x > t2 as i64 {
                    refuted = true;
                    return false;
                }
            }
            // Precedence asserts both nodes appear, so a node that can
            // never appear in this run refutes it outright.
            (Appearance::No, _) | (_, Appearance::No) => {
                refuted = true;
                return false;
            }
            // An unresolved chain in a truncated prefix stays undecided.
            _ => uncertain += 1,
        }
        true
    })?;
    let verdict = if refuted {
        ThreeValued::False
    } else if uncertain > 0 {
        ThreeValued::Unknown
    } else {
        ThreeValued::True
    };
    Ok(OracleAnswer {
        verdict,
        runs_checked: checked,
        uncertain_runs: uncertain,
    })
}

/// The knowledge check against a pre-enumerated run list (one enumeration
/// can serve many queries). Semantics match [`oracle_knows`].
pub fn knows_among<'a>(
    runs: impl IntoIterator<Item = &'a Run>,
    observer_state: &crate::state::BasicNode,
    first: &GeneralNode,
    second: &GeneralNode,
    x: i64,
) -> OracleAnswer {
    let mut checked = 0;
    let mut uncertain = 0;
    let mut refuted = false;
    for r in runs {
        if r.find(observer_state).is_none() {
            continue;
        }
        checked += 1;
        match (appearance(r, first), appearance(r, second)) {
            (Appearance::Resolved(t1), Appearance::Resolved(t2)) => {
                if (t1 as i64) + x > t2 as i64 {
                    refuted = true;
                    break;
                }
            }
            (Appearance::No, _) | (_, Appearance::No) => {
                refuted = true;
                break;
            }
            _ => uncertain += 1,
        }
    }
    let verdict = if refuted {
        ThreeValued::False
    } else if uncertain > 0 {
        ThreeValued::Unknown
    } else {
        ThreeValued::True
    };
    OracleAnswer {
        verdict,
        runs_checked: checked,
        uncertain_runs: uncertain,
    }
}

/// Ground truth for the system-wide support of a precedence statement: in
/// every enumerated run, if either node appears then both do, at least `x`
/// apart.
pub fn oracle_supports(
    net: Arc<Network>,
    externals: &[ExternalInput],
    first: &GeneralNode,
    second: &GeneralNode,
    x: i64,
    budget: &EnumerationBudget,
) -> Result<OracleAnswer, OracleError> {
    let mut checked = 0;
    let mut uncertain = 0;
    let mut refuted = false;
    for_each_run(net, externals, budget, &mut |r| {
        checked += 1;
        match (appearance(r, first), appearance(r, second)) {
            (Appearance::Resolved(t1), Appearance::Resolved(t2)) => {
                if (t1 as i64) + x > t2 as i64 {
                    refuted = true;
                    return false;
                }
            }
            (Appearance::No, Appearance::No) => {}
            (Appearance::Resolved(_), Appearance::No)
            | (Appearance::No, Appearance::Resolved(_)) => {
                // One appears without the other in a quiescent run.
                refuted = true;
                return false;
            }
            _ => uncertain += 1,
        }
        true
    })?;
    let verdict = if refuted {
        ThreeValued::False
    } else if uncertain > 0 {
        ThreeValued::Unknown
    } else {
        ThreeValued::True
    };
    Ok(OracleAnswer {
        verdict,
        runs_checked: checked,
        uncertain_runs: uncertain,
    })
}

/// Exploration helper: the product of delivery-window sizes, the expected
/// run count when no delivery can influence another message's window.
pub fn window_product(run: &Run) -> u64 {
    let mut product = 1u64;
    for m in run.sent_messages() {
        let b = run.net().bounds(m.src, m.dst).expect("channel exists");
        product *= (b.upper - b.lower + 1) as u64;
    }
    product
}

/// Minimum of `time(second) - time(first)` over enumerated runs where both
/// resolve, with the count of undecided runs. `None` when no run resolves
/// both.
pub fn min_gap(
    net: Arc<Network>,
    externals: &[ExternalInput],
    first: &GeneralNode,
    second: &GeneralNode,
    budget: &EnumerationBudget,
) -> Result<(Option<i64>, usize), OracleError> {
    let mut best: Option<i64> = None;
    let mut uncertain = 0;
    for_each_run(net, externals, budget, &mut |r| {
        match (appearance(r, first), appearance(r, second)) {
            (Appearance::Resolved(t1), Appearance::Resolved(t2)) => {
                let gap = t2 as i64 - t1 as i64;
                best = Some(best.map_or(gap, |b: i64| b.min(gap)));
            }
            (Appearance::No, Appearance::No) => {}
            _ => uncertain += 1,
        }
        true
    })?;
    Ok((best, uncertain))
}

/// Convenience: group enumerated runs by whether the observer's state
/// appears, for completeness checks in tests.
pub fn count_runs(
    net: Arc<Network>,
    externals: &[ExternalInput],
    budget: &EnumerationBudget,
) -> Result<usize, OracleError> {
    let mut n = 0;
    for_each_run(net, externals, budget, &mut |_| {
        n += 1;
        true
    })?;
    Ok(n)
}

/// The canonical per-process pasts of the observer across indistinguishable
/// runs, used to check that pasts are a function of the observer's state.
pub fn past_signature(
    run: &Run,
    observer: NodeId,
) -> BTreeMap<ProcId, Vec<crate::state::BasicNode>> {
    let mut map: BTreeMap<ProcId, Vec<crate::state::BasicNode>> = BTreeMap::new();
    for id in crate::causality::past(run, observer).expect("observer in run") {
        map.entry(id.proc)
            .or_default()
            .push(run.node(id).expect("past node in run"));
    }
    for nodes in map.values_mut() {
        nodes.sort_by_key(|n| n.index());
    }
    map
}
