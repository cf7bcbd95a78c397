//! Valid timing functions and the two run constructions built from them:
//! the slow run, which delays every node as much as the constraints allow
//! relative to a target node, and the fast run, which pulls everything the
//! observer cannot see as early as possible while reproducing the
//! observer's past exactly.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::json;
use thiserror::Error;

use crate::causality::{past, resolve_id, split_at_region, CausalityError, GeneralNode};
use crate::graph::{
    build_basic, build_extended, BoundsGraph, GraphError, GraphNode, SourcePartition, NEG_INF,
};
use crate::network::{ProcId, ProcPath};
use crate::sim::{synthesize_run, Delivery, ExternalInput, MessageInstance, Run, SimError};
use crate::state::NodeId;

#[derive(Debug, Error)]
pub enum TimingError {
    #[error("timing domain disagrees with the graph")]
    DomainMismatch,
    #[error("node set is not precedence-closed at {0:?}")]
    NotPClosed(NodeId),
    #[error("invalid timing: {0}")]
    InvalidTiming(String),
    #[error("node does not appear in the run")]
    NodeAbsent,
    #[error("anchor node is not recognized at the observer")]
    NotRecognized,
    #[error("anchor resolves to an initial node")]
    TimeZeroBase,
    #[error("construction needs horizon {needed}, cap is {cap}")]
    HorizonOverflow { needed: u32, cap: u32 },
    #[error("dropped message obligation at {forced_at} within horizon {horizon}")]
    HorizonConflict { forced_at: u32, horizon: u32 },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Causality(#[from] CausalityError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// An assignment of times to graph nodes. Valid w.r.t. a graph when every
/// edge inside the domain satisfies `T(u) + w <= T(v)`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TimingFunction {
    values: BTreeMap<GraphNode, u32>,
}

impl TimingFunction {
    pub fn new(values: BTreeMap<GraphNode, u32>) -> Self {
        TimingFunction { values }
    }

    pub fn get(&self, node: GraphNode) -> Option<u32> {
        self.values.get(&node).copied()
    }

    pub fn basic(&self, id: NodeId) -> Option<u32> {
        self.get(GraphNode::Basic(id))
    }

    pub fn aux(&self, proc: ProcId) -> Option<u32> {
        self.get(GraphNode::Aux(proc))
    }

    pub fn domain(&self) -> impl Iterator<Item = GraphNode> + '_ {
        self.values.keys().copied()
    }

    pub fn set(&mut self, node: GraphNode, value: u32) {
        self.values.insert(node, value);
    }

    /// JSON object mapping node addresses to times, keys sorted.
    pub fn to_json(&self, run: &Run) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (node, value) in &self.values {
            let key = match node {
                GraphNode::Basic(id) => {
                    format!("{}@{}", run.net().proc_name(id.proc), id.index)
                }
                GraphNode::Aux(p) => format!("psi_{}", run.net().proc_name(*p)),
            };
            map.insert(key, json!(value));
        }
        serde_json::Value::Object(map)
    }
}

/// Checks `T(u) + w <= T(v)` on every graph edge whose endpoints both lie
/// in the timing's domain. The domain must be a subset of the graph.
pub fn is_valid_timing(g: &BoundsGraph, timing: &TimingFunction) -> Result<bool, TimingError> {
    for node in timing.domain() {
        if !g.contains(node) {
            return Err(TimingError::DomainMismatch);
        }
    }
    for (u, v, w) in g.edges() {
        if let (Some(tu), Some(tv)) = (timing.get(u), timing.get(v)) {
            if tu as i64 + w > tv as i64 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The slow timing of a target node: over the target's precedence set,
/// assign `T(v) = D - d(v)` where `d(v)` is the longest-path weight from
/// `v` to the target and `D` its maximum. Every node then sits as late as
/// the constraints permit relative to the target.
pub fn slow_timing(run: &Run, target: &GeneralNode) -> Result<TimingFunction, TimingError> {
    let sigma = resolve_id(run, target).ok_or(TimingError::NodeAbsent)?;
    let g = build_basic(run)?;
    let dist = g.longest_to(GraphNode::Basic(sigma))?;
    let dmax = (0..g.nodes().len())
        .filter(|i| dist[*i] != NEG_INF)
        .map(|i| dist[i])
        .max()
        .expect("target reaches itself");
    let mut values = BTreeMap::new();
    for (i, node) in g.nodes().iter().enumerate() {
        if dist[i] != NEG_INF {
            let t = dmax - dist[i];
            debug_assert!(t >= 0);
            values.insert(*node, t as u32);
        }
    }
    Ok(TimingFunction::new(values))
}

/// Rebuilds a run realizing a valid timing on a precedence-closed node set:
/// exactly those nodes (plus all initial nodes) occur, each non-initial one
/// at its assigned time, with the same message pattern. The source run must
/// deliver every message the kept nodes send, or the construction reports a
/// horizon conflict.
pub fn run_by_timing(
    run: &Run,
    keep: &BTreeSet<NodeId>,
    timing: &TimingFunction,
) -> Result<Run, TimingError> {
    let g = build_basic(run)?;
    let keep_graph: BTreeSet<GraphNode> = keep.iter().map(|id| GraphNode::Basic(*id)).collect();
    for node in &keep_graph {
        if !g.contains(*node) {
            return Err(TimingError::NodeAbsent);
        }
    }
    if !g.is_p_closed(&keep_graph) {
        let offender = keep
            .iter()
            .find(|id| {
                g.edges()
                    .iter()
                    .any(|(u, v, _)| *v == GraphNode::Basic(**id) && !keep_graph.contains(u))
            })
            .copied()
            .unwrap_or(NodeId::new(ProcId(0), 0));
        return Err(TimingError::NotPClosed(offender));
    }
    for id in keep {
        if timing.basic(*id).is_none() {
            return Err(TimingError::InvalidTiming(format!(
                "no time for p{}@{}",
                id.proc.0, id.index
            )));
        }
    }
    for (u, v, w) in g.edges() {
        if keep_graph.contains(&u) && keep_graph.contains(&v) {
            let (GraphNode::Basic(a), GraphNode::Basic(b)) = (u, v) else {
                unreachable!()
            };
            let (ta, tb) = (
                timing.basic(a).unwrap() as i64,
                timing.basic(b).unwrap() as i64,
            );
            if ta + w > tb {
                return Err(TimingError::InvalidTiming(format!(
                    "edge p{}@{} -> p{}@{} violated: {ta} + {w} > {tb}",
                    a.proc.0, a.index, b.proc.0, b.index
                )));
            }
        }
    }

    let mut externals: Vec<ExternalInput> = Vec::new();
    let mut deliveries: Vec<Delivery> = Vec::new();
    let mut horizon = 1u32;
    for &id in keep {
        if id.index == 0 {
            continue;
        }
        let t = timing.basic(id).unwrap();
        horizon = horizon.max(t);
        let old_time = run.time(id).expect("kept node in run");
        for ext in run
            .externals()
            .iter()
            .filter(|e| e.target == id.proc && e.time == old_time)
        {
            externals.push(ExternalInput {
                id: ext.id.clone(),
                target: id.proc,
                time: t,
            });
        }
    }
    for d in run.deliveries() {
        let sender = NodeId::new(d.msg.src, d.msg.src_index);
        if !keep.contains(&sender) {
            continue;
        }
        let receiver = run
            .node_at_time(d.msg.dst, d.deliver_time)
            .expect("delivery produced a node");
        assert!(
            keep.contains(&receiver),
            "p-closed set keeps receivers of kept senders"
        );
        deliveries.push(Delivery {
            msg: MessageInstance {
                src: d.msg.src,
                src_index: d.msg.src_index,
                dst: d.msg.dst,
                send_time: timing.basic(sender).unwrap(),
            },
            deliver_time: timing.basic(receiver).unwrap(),
        });
    }

    // Messages sent by kept nodes and undelivered in the source run must
    // stay undeliverable within the new horizon.
    for &id in keep {
        if id.index == 0 {
            continue;
        }
        for &dst in run.net().out_channels(id.proc) {
            if run.delivery_of(id, dst).is_none() {
                let upper = run
                    .net()
                    .bounds(id.proc, dst)
                    .expect("channel exists")
                    .upper;
                let forced = timing.basic(id).unwrap() + upper;
                if forced <= horizon {
                    return Err(TimingError::HorizonConflict {
                        forced_at: forced,
                        horizon,
                    });
                }
            }
        }
    }

    Ok(synthesize_run(
        run.net().clone(),
        horizon,
        &externals,
        &deliveries,
    )?)
}

/// How the fast run delivered a message.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DeliveryCondition {
    /// Replayed a delivery of the observer's past at its assigned time.
    PastReplay,
    /// A hop of the anchor's designated chain, delivered at its upper bound.
    DesignatedUpper,
    /// Floor rule, with the lower bound as the binding term.
    FloorAtLower,
    /// Floor rule, with the destination's auxiliary time binding strictly.
    FloorAtAux,
}

/// The fast timing plus the data it was derived from.
#[derive(Clone, Debug)]
pub struct FastTiming {
    pub timing: TimingFunction,
    pub partition: SourcePartition,
    pub graph: BoundsGraph,
    /// Effective anchor: the last chain node inside the observer's past and
    /// the remaining suffix path.
    pub source: NodeId,
    pub suffix: ProcPath,
    pub gamma: u32,
}

/// The fast timing of a recognized anchor node: nodes its effective base
/// reaches in the observer's extended graph sit exactly at their longest
/// path from it, everything else as early as the constraints toward the
/// observer allow — at least `gamma + 1` earlier than any reached node.
pub fn fast_timing(
    run: &Run,
    observer: NodeId,
    anchor: &GeneralNode,
    gamma: u32,
) -> Result<FastTiming, TimingError> {
    let visible = past(run, observer)?;
    let base = run.find(&anchor.base).ok_or(TimingError::NodeAbsent)?;
    if !visible.contains(&base) {
        return Err(TimingError::NotRecognized);
    }
    let resolved = resolve_id(run, anchor).ok_or(TimingError::NodeAbsent)?;
    if run.time(resolved) == Some(0) {
        return Err(TimingError::TimeZeroBase);
    }
    let (source, suffix) =
        split_at_region(run, anchor, &visible).expect("anchor base is in the past");

    let g = build_extended(run, observer)?;
    let partition = g.partition_by_source(source)?;
    assert!(
        partition.basic_reached.contains(&source),
        "effective anchor reaches itself"
    );
    let d = g.longest_from(GraphNode::Basic(source))?;
    let f = g.longest_to(GraphNode::Basic(observer))?;

    let dmin = (0..g.nodes().len())
        .filter(|i| d[*i] != NEG_INF)
        .map(|i| d[i])
        .min()
        .expect("source reached");
    let (f1, f2) = if partition.basic_unreached.is_empty() {
        (0, 0)
    } else {
        let fs: Vec<i64> = partition
            .basic_unreached
            .iter()
            .map(|id| {
                let i = g
                    .nodes()
                    .iter()
                    .position(|n| *n == GraphNode::Basic(*id))
                    .unwrap();
                assert!(f[i] != NEG_INF, "past nodes reach the observer");
                f[i]
            })
            .collect();
        (*fs.iter().max().unwrap(), *fs.iter().min().unwrap())
    };

    let mut values = BTreeMap::new();
    for (i, node) in g.nodes().iter().enumerate() {
        let t = if d[i] != NEG_INF {
            1 + f1 - f2 + gamma as i64 - dmin + d[i]
        } else {
            match node {
                GraphNode::Basic(_) => f1 - f[i],
                GraphNode::Aux(_) => 0,
            }
        };
        assert!(t >= 0, "fast timing is non-negative");
        values.insert(*node, t as u32);
    }
    Ok(FastTiming {
        timing: TimingFunction::new(values),
        partition,
        graph: g,
        source,
        suffix,
        gamma,
    })
}

/// A fast run with the bookkeeping needed to audit it.
#[derive(Clone, Debug)]
pub struct FastRun {
    pub run: Run,
    pub timing: FastTiming,
    /// Which rule delivered each message, keyed by `(src, src_index, dst)`
    /// in the fast run.
    pub conditions: BTreeMap<(ProcId, u32, ProcId), DeliveryCondition>,
}

const HORIZON_CAP: u32 = 50_000;

/// Suggested horizon: enough for every assigned time, the designated chain
/// at upper bounds, and `extra` further chain slack.
pub fn fast_horizon(run: &Run, ft: &FastTiming, extra: u32) -> u32 {
    let max_t = ft
        .timing
        .domain()
        .filter_map(|n| ft.timing.get(n))
        .max()
        .unwrap_or(0);
    let chain_upper = run.net().path_upper(&ft.suffix).unwrap_or(0);
    max_t + chain_upper + extra
}

/// Executes the fast-run delivery policy to `horizon`:
/// 1. deliveries inside the observer's past replay at their assigned times
///    (reproducing the past exactly),
/// 2. the anchor's designated chain rides upper bounds,
/// 3. everything else lands at `max(send + lower, aux time of the
///    destination)`.
///
/// External inputs are delivered only at past nodes that received them.
pub fn fast_run(
    run: &Run,
    observer: NodeId,
    anchor: &GeneralNode,
    gamma: u32,
    horizon: u32,
) -> Result<FastRun, TimingError> {
    if horizon > HORIZON_CAP {
        return Err(TimingError::HorizonOverflow {
            needed: horizon,
            cap: HORIZON_CAP,
        });
    }
    let ft = fast_timing(run, observer, anchor, gamma)?;
    let visible = past(run, observer)?;

    let proc_count = run.net().proc_count();
    let mut past_len = vec![0u32; proc_count];
    for id in &visible {
        past_len[id.proc.index()] = past_len[id.proc.index()].max(id.index + 1);
    }

    // For each past sender and channel: the receiving past node in the
    // source run, when the delivery stayed inside the past.
    let mut replay_target: BTreeMap<(NodeId, ProcId), NodeId> = BTreeMap::new();
    for d in run.deliveries() {
        let sender = NodeId::new(d.msg.src, d.msg.src_index);
        if !visible.contains(&sender) {
            continue;
        }
        if let Some(receiver) = run.node_at_time(d.msg.dst, d.deliver_time) {
            if visible.contains(&receiver) {
                replay_target.insert((sender, d.msg.dst), receiver);
            }
        }
    }

    struct PendingMsg {
        src: NodeId,
        dst: ProcId,
        send_time: u32,
        rule: DeliveryCondition,
        deliver_at: u32,
    }

    let mut externals: Vec<ExternalInput> = Vec::new();
    let mut deliveries: Vec<Delivery> = Vec::new();
    let mut conditions: BTreeMap<(ProcId, u32, ProcId), DeliveryCondition> = BTreeMap::new();
    let mut pending: Vec<PendingMsg> = Vec::new();
    let mut line_len = vec![1u32; proc_count];

    // Designated chain: the node the chain currently stands at and the next
    // hop to deliver.
    let mut chain_hop = 0usize;
    let mut chain_at = ft.source;

    for m in 1..=horizon {
        let mut batch_msgs: BTreeMap<ProcId, Vec<PendingMsg>> = BTreeMap::new();
        let mut rest: Vec<PendingMsg> = Vec::new();
        for p in pending {
            if p.deliver_at == m {
                batch_msgs.entry(p.dst).or_default().push(p);
            } else {
                rest.push(p);
            }
        }
        pending = rest;

        let mut ext_here: BTreeMap<ProcId, Vec<String>> = BTreeMap::new();
        for proc in run.net().procs() {
            let next = line_len[proc.index()];
            if next < past_len[proc.index()] {
                let node = NodeId::new(proc, next);
                if ft.timing.basic(node) == Some(m) {
                    let old_time = run.time(node).expect("past node in run");
                    for ext in run
                        .externals()
                        .iter()
                        .filter(|e| e.target == proc && e.time == old_time)
                    {
                        ext_here.entry(proc).or_default().push(ext.id.clone());
                    }
                }
            }
        }

        let mut touched: BTreeSet<ProcId> = BTreeSet::new();
        touched.extend(batch_msgs.keys().copied());
        touched.extend(ext_here.keys().copied());

        for proc in touched {
            let msgs = batch_msgs.remove(&proc).unwrap_or_default();
            for ext_id in ext_here.remove(&proc).unwrap_or_default() {
                externals.push(ExternalInput {
                    id: ext_id,
                    target: proc,
                    time: m,
                });
            }
            let new_index = line_len[proc.index()];
            for p in &msgs {
                deliveries.push(Delivery {
                    msg: MessageInstance {
                        src: p.src.proc,
                        src_index: p.src.index,
                        dst: proc,
                        send_time: p.send_time,
                    },
                    deliver_time: m,
                });
                conditions.insert((p.src.proc, p.src.index, proc), p.rule);
            }
            line_len[proc.index()] += 1;
            let new_node = NodeId::new(proc, new_index);

            // Past nodes replay exactly at their assigned times.
            if new_index < past_len[proc.index()] {
                assert_eq!(
                    ft.timing.basic(new_node),
                    Some(m),
                    "past node realized off schedule"
                );
            }

            // Designated chain advance.
            if chain_hop < ft.suffix.hop_count() {
                let expect_dst = ft.suffix.hops()[chain_hop + 1];
                if proc == expect_dst
                    && msgs.iter().any(|p| {
                        p.src == chain_at && matches!(p.rule, DeliveryCondition::DesignatedUpper)
                    })
                {
                    chain_at = new_node;
                    chain_hop += 1;
                }
            }

            // FFIP sends from the new node on every outgoing channel.
            for &dst in run.net().out_channels(proc) {
                let b = run.net().bounds(proc, dst).expect("channel exists");
                let in_past = new_node.index < past_len[proc.index()];
                let (rule, deliver_at);
                if in_past && replay_target.contains_key(&(new_node, dst)) {
                    let target = replay_target[&(new_node, dst)];
                    rule = DeliveryCondition::PastReplay;
                    deliver_at = ft.timing.basic(target).expect("past node timed");
                } else if chain_hop < ft.suffix.hop_count()
                    && new_node == chain_at
                    && dst == ft.suffix.hops()[chain_hop + 1]
                {
                    rule = DeliveryCondition::DesignatedUpper;
                    deliver_at = m + b.upper;
                } else {
                    let floor = ft.timing.aux(dst).expect("aux node timed");
                    let at_lower = m + b.lower;
                    if at_lower >= floor {
                        rule = DeliveryCondition::FloorAtLower;
                        deliver_at = at_lower;
                    } else {
                        rule = DeliveryCondition::FloorAtAux;
                        deliver_at = floor;
                    }
                }
                debug_assert!(
                    deliver_at >= m + b.lower && deliver_at <= m + b.upper,
                    "fast-run delivery respects the window"
                );
                if deliver_at <= horizon {
                    pending.push(PendingMsg {
                        src: new_node,
                        dst,
                        send_time: m,
                        rule,
                        deliver_at,
                    });
                }
            }
        }
    }

    let fast = synthesize_run(run.net().clone(), horizon, &externals, &deliveries)?;
    // The observer's node must appear: the construction replays its past.
    assert!(
        fast.find(&run.node(observer).expect("observer in run"))
            .is_some(),
        "fast run reproduces the observer's node"
    );
    Ok(FastRun {
        run: fast,
        timing: ft,
        conditions,
    })
}
