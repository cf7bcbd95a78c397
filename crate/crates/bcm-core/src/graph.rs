//! Bounds graphs: weighted digraphs over the basic nodes of a run encoding
//! its timing constraints.
//!
//! Successor edges carry weight 1 (consecutive states of one process are at
//! least one step apart). A delivered message on channel `(i, j)` adds a
//! forward edge of weight `lower` and a back edge of weight `-upper`. Any
//! path's weight lower-bounds the time difference between its endpoints,
//! so longest paths give the tightest derivable constraints. The extended
//! graph adds one auxiliary node per process, standing for the earliest
//! point on that process line past the observer's view, which turns the
//! observer's partial view into a sound constraint system.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::causality::{boundary_nodes, past, CausalityError};
use crate::network::ProcId;
use crate::sim::Run;
use crate::state::NodeId;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("node {0:?} is not in the graph")]
    NodeNotInGraph(GraphNode),
    #[error("run violates its own bounds: positive cycle through {0:?}")]
    PositiveCycle(GraphNode),
    #[error(transparent)]
    Causality(#[from] CausalityError),
}

/// A vertex: a basic node of the run, or the auxiliary per-process node of
/// an extended graph.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum GraphNode {
    Basic(NodeId),
    Aux(ProcId),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum GraphTag {
    Basic,
    Local(NodeId),
    Extended(NodeId),
}

/// Weighted digraph with longest-path queries. Edge weights are exact
/// integers; construction asserts the absence of positive cycles, which
/// makes longest paths well-defined.
#[derive(Clone, Debug)]
pub struct BoundsGraph {
    tag: GraphTag,
    nodes: Vec<GraphNode>,
    index: BTreeMap<GraphNode, usize>,
    out: Vec<Vec<(usize, i64)>>,
    into: Vec<Vec<(usize, i64)>>,
}

pub const NEG_INF: i64 = i64::MIN / 4;

impl BoundsGraph {
    fn empty(tag: GraphTag) -> Self {
        BoundsGraph {
            tag,
            nodes: Vec::new(),
            index: BTreeMap::new(),
            out: Vec::new(),
            into: Vec::new(),
        }
    }

    pub fn tag(&self) -> &GraphTag {
        &self.tag
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn contains(&self, node: GraphNode) -> bool {
        self.index.contains_key(&node)
    }

    pub fn basic_nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            GraphNode::Basic(id) => Some(*id),
            GraphNode::Aux(_) => None,
        })
    }

    fn add_node(&mut self, node: GraphNode) -> usize {
        *self.index.entry(node).or_insert_with(|| {
            self.nodes.push(node);
            self.out.push(Vec::new());
            self.into.push(Vec::new());
            self.nodes.len() - 1
        })
    }

    /// Parallel edges collapse to the single tightest constraint: only the
    /// maximal weight per ordered pair matters for longest paths.
    fn add_edge(&mut self, from: GraphNode, to: GraphNode, weight: i64) {
        let u = self.add_node(from);
        let v = self.add_node(to);
        if let Some(existing) = self.out[u].iter_mut().find(|(t, _)| *t == v) {
            if existing.1 < weight {
                existing.1 = weight;
                let back = self.into[v].iter_mut().find(|(s, _)| *s == u).unwrap();
                back.1 = weight;
            }
            return;
        }
        self.out[u].push((v, weight));
        self.into[v].push((u, weight));
    }

    pub fn edges(&self) -> Vec<(GraphNode, GraphNode, i64)> {
        let mut out = Vec::new();
        for (u, adj) in self.out.iter().enumerate() {
            for &(v, w) in adj {
                out.push((self.nodes[u], self.nodes[v], w));
            }
        }
        out.sort();
        out
    }

    pub fn edge_weight(&self, from: GraphNode, to: GraphNode) -> Option<i64> {
        let u = *self.index.get(&from)?;
        let v = *self.index.get(&to)?;
        self.out[u].iter().find(|(t, _)| *t == v).map(|(_, w)| *w)
    }

    fn idx(&self, node: GraphNode) -> Result<usize, GraphError> {
        self.index
            .get(&node)
            .copied()
            .ok_or(GraphError::NodeNotInGraph(node))
    }

    /// Bellman-Ford relaxation maximizing path weight; sound because all
    /// cycles have non-positive weight. Parent pointers record the last
    /// strict improvement, so they never cycle.
    fn relax(&self, dist: &mut [i64], parent: &mut [Option<usize>], forward: bool) {
        let adj = if forward { &self.out } else { &self.into };
        for _ in 0..self.nodes.len() {
            let mut changed = false;
            for u in 0..self.nodes.len() {
                if dist[u] == NEG_INF {
                    continue;
                }
                for &(v, w) in &adj[u] {
                    if dist[u] + w > dist[v] {
                        dist[v] = dist[u] + w;
                        parent[v] = Some(u);
                        changed = true;
                    }
                }
            }
            if !changed {
                return;
            }
        }
    }

    fn assert_no_positive_cycle(&self) -> Result<(), GraphError> {
        let mut dist = vec![0i64; self.nodes.len()];
        for _ in 0..self.nodes.len() {
            let mut changed = false;
            for u in 0..self.nodes.len() {
                for &(v, w) in &self.out[u] {
                    if dist[u] + w > dist[v] {
                        dist[v] = dist[u] + w;
                        changed = true;
                    }
                }
            }
            if !changed {
                return Ok(());
            }
        }
        for u in 0..self.nodes.len() {
            for &(v, w) in &self.out[u] {
                if dist[u] + w > dist[v] {
                    return Err(GraphError::PositiveCycle(self.nodes[v]));
                }
            }
        }
        Ok(())
    }

    /// Maximal path weights from `source` to every node; `NEG_INF` marks
    /// unreachable nodes. `dist[source] = 0` (the empty path).
    pub fn longest_from(&self, source: GraphNode) -> Result<Vec<i64>, GraphError> {
        Ok(self.longest_from_with_parents(source)?.0)
    }

    fn longest_from_with_parents(
        &self,
        source: GraphNode,
    ) -> Result<(Vec<i64>, Vec<Option<usize>>), GraphError> {
        let s = self.idx(source)?;
        let mut dist = vec![NEG_INF; self.nodes.len()];
        let mut parent = vec![None; self.nodes.len()];
        dist[s] = 0;
        self.relax(&mut dist, &mut parent, true);
        Ok((dist, parent))
    }

    /// Maximal path weights from every node to `target`.
    pub fn longest_to(&self, target: GraphNode) -> Result<Vec<i64>, GraphError> {
        let t = self.idx(target)?;
        let mut dist = vec![NEG_INF; self.nodes.len()];
        let mut parent = vec![None; self.nodes.len()];
        dist[t] = 0;
        self.relax(&mut dist, &mut parent, false);
        Ok(dist)
    }

    /// Maximal total edge weight over paths `from -> to`; `None` when
    /// unreachable, 0 when `from == to`.
    pub fn longest_path(&self, from: GraphNode, to: GraphNode) -> Result<Option<i64>, GraphError> {
        let dist = self.longest_from(from)?;
        let t = self.idx(to)?;
        Ok(if dist[t] == NEG_INF {
            None
        } else {
            Some(dist[t])
        })
    }

    pub fn distance(&self, dist: &[i64], node: GraphNode) -> Result<Option<i64>, GraphError> {
        let i = self.idx(node)?;
        Ok(if dist[i] == NEG_INF {
            None
        } else {
            Some(dist[i])
        })
    }

    /// One maximal-weight path `from -> to` as a node list, when reachable.
    pub fn longest_path_nodes(
        &self,
        from: GraphNode,
        to: GraphNode,
    ) -> Result<Option<Vec<GraphNode>>, GraphError> {
        let (dist, parent) = self.longest_from_with_parents(from)?;
        let t = self.idx(to)?;
        if dist[t] == NEG_INF {
            return Ok(None);
        }
        let s = self.idx(from)?;
        let mut path = vec![t];
        let mut cur = t;
        while cur != s {
            let prev = parent[cur].expect("reachable node has a parent");
            path.push(prev);
            cur = prev;
        }
        path.reverse();
        Ok(Some(path.into_iter().map(|i| self.nodes[i]).collect()))
    }

    /// All nodes with a path to `node` (including the node itself): the
    /// node's precedence set. Always precedence-closed.
    pub fn precedence_set(&self, node: GraphNode) -> Result<BTreeSet<GraphNode>, GraphError> {
        let dist = self.longest_to(node)?;
        Ok(self
            .nodes
            .iter()
            .enumerate()
            .filter(|(i, _)| dist[*i] != NEG_INF)
            .map(|(_, n)| *n)
            .collect())
    }

    /// True iff every edge into the set originates inside the set.
    pub fn is_p_closed(&self, set: &BTreeSet<GraphNode>) -> bool {
        set.iter().all(|&n| match self.index.get(&n) {
            Some(&v) => self.into[v]
                .iter()
                .all(|(u, _)| set.contains(&self.nodes[*u])),
            None => false,
        })
    }

    /// Reachability partition from `source` over basic and auxiliary nodes.
    pub fn partition_by_source(&self, source: NodeId) -> Result<SourcePartition, GraphError> {
        let dist = self.longest_from(GraphNode::Basic(source))?;
        let mut part = SourcePartition::default();
        for (i, node) in self.nodes.iter().enumerate() {
            let reached = dist[i] != NEG_INF;
            match (node, reached) {
                (GraphNode::Basic(id), true) => drop(part.basic_reached.insert(*id)),
                (GraphNode::Basic(id), false) => drop(part.basic_unreached.insert(*id)),
                (GraphNode::Aux(p), true) => drop(part.aux_reached.insert(*p)),
                (GraphNode::Aux(p), false) => drop(part.aux_unreached.insert(*p)),
            }
        }
        Ok(part)
    }

    /// DOT rendering with deterministic node order. Basic nodes are labeled
    /// `P@k`, auxiliaries `psi_P`.
    pub fn to_dot(&self, run: &Run) -> String {
        let name = |n: &GraphNode| match n {
            GraphNode::Basic(id) => format!("{}_{}", run.net().proc_name(id.proc), id.index),
            GraphNode::Aux(p) => format!("psi_{}", run.net().proc_name(*p)),
        };
        let label = |n: &GraphNode| match n {
            GraphNode::Basic(id) => format!("{}@{}", run.net().proc_name(id.proc), id.index),
            GraphNode::Aux(p) => format!("psi_{}", run.net().proc_name(*p)),
        };
        let mut sorted: Vec<&GraphNode> = self.nodes.iter().collect();
        sorted.sort();
        let mut dot = String::from("digraph bounds {\n  rankdir=LR;\n");
        for n in &sorted {
            let shape = match n {
                GraphNode::Basic(_) => "ellipse",
                GraphNode::Aux(_) => "box",
            };
            let _ = writeln!(
                dot,
                "  {} [label=\"{}\", shape={}];",
                name(n),
                label(n),
                shape
            );
        }
        for (from, to, w) in self.edges() {
            let _ = writeln!(dot, "  {} -> {} [label=\"{}\"];", name(&from), name(&to), w);
        }
        dot.push_str("}\n");
        dot
    }
}

/// Reachability partition of an extended graph from a source basic node.
#[derive(Clone, Default, Debug)]
pub struct SourcePartition {
    pub basic_reached: BTreeSet<NodeId>,
    pub basic_unreached: BTreeSet<NodeId>,
    pub aux_reached: BTreeSet<ProcId>,
    pub aux_unreached: BTreeSet<ProcId>,
}

fn add_run_edges(g: &mut BoundsGraph, run: &Run, keep: impl Fn(NodeId) -> bool) {
    for proc in run.net().procs() {
        let line = run.timeline(proc);
        for k in 0..line.len() {
            let id = NodeId::new(proc, k as u32);
            if !keep(id) {
                continue;
            }
            g.add_node(GraphNode::Basic(id));
            if k > 0 {
                let prev = NodeId::new(proc, k as u32 - 1);
                if keep(prev) {
                    g.add_edge(GraphNode::Basic(prev), GraphNode::Basic(id), 1);
                }
            }
        }
    }
    for d in run.deliveries() {
        let src = NodeId::new(d.msg.src, d.msg.src_index);
        let dst = run
            .node_at_time(d.msg.dst, d.deliver_time)
            .expect("delivery produced a node");
        if !keep(src) || !keep(dst) {
            continue;
        }
        let bounds = run
            .net()
            .bounds(d.msg.src, d.msg.dst)
            .expect("channel exists");
        g.add_edge(
            GraphNode::Basic(src),
            GraphNode::Basic(dst),
            bounds.lower as i64,
        );
        g.add_edge(
            GraphNode::Basic(dst),
            GraphNode::Basic(src),
            -(bounds.upper as i64),
        );
    }
}

/// The basic bounds graph of a run: all its basic nodes, successor edges,
/// and per-delivery lower/upper edges.
pub fn build_basic(run: &Run) -> Result<BoundsGraph, GraphError> {
    let mut g = BoundsGraph::empty(GraphTag::Basic);
    add_run_edges(&mut g, run, |_| true);
    g.assert_no_positive_cycle()?;
    Ok(g)
}

/// The subgraph of the basic graph induced by the observer's past.
pub fn build_local(run: &Run, observer: NodeId) -> Result<BoundsGraph, GraphError> {
    let visible = past(run, observer)?;
    let mut g = BoundsGraph::empty(GraphTag::Local(observer));
    add_run_edges(&mut g, run, |id| visible.contains(&id));
    g.assert_no_positive_cycle()?;
    Ok(g)
}

/// The extended graph: the local graph plus one auxiliary node per process
/// (the earliest point past the observer's view on that line), with
/// - weight-1 edges from each boundary node to its process auxiliary,
/// - an edge `aux(dst) -> sender` of weight `-upper` for every message sent
///   from the past and not received inside it, and
/// - an edge `aux(dst) -> aux(src)` of weight `-upper` per channel, because
///   flooding re-broadcasts at every unseen point as well.
pub fn build_extended(run: &Run, observer: NodeId) -> Result<BoundsGraph, GraphError> {
    let visible = past(run, observer)?;
    let mut g = BoundsGraph::empty(GraphTag::Extended(observer));
    add_run_edges(&mut g, run, |id| visible.contains(&id));

    for proc in run.net().procs() {
        g.add_node(GraphNode::Aux(proc));
    }
    for (proc, node) in boundary_nodes(run, observer)? {
        g.add_edge(GraphNode::Basic(node), GraphNode::Aux(proc), 1);
    }
    // Messages leaving the past: receivable no earlier than the auxiliary
    // point of their destination.
    for &sender in &visible {
        if sender.index == 0 {
            continue;
        }
        for &dst in run.net().out_channels(sender.proc) {
            let received_inside = run
                .delivery_of(sender, dst)
                .and_then(|d| run.node_at_time(dst, d.deliver_time))
                .is_some_and(|node| visible.contains(&node));
            if !received_inside {
                let upper = run
                    .net()
                    .bounds(sender.proc, dst)
                    .expect("channel exists")
                    .upper;
                g.add_edge(
                    GraphNode::Aux(dst),
                    GraphNode::Basic(sender),
                    -(upper as i64),
                );
            }
        }
    }
    for ((src, dst), bounds) in run.net().channels() {
        g.add_edge(
            GraphNode::Aux(dst),
            GraphNode::Aux(src),
            -(bounds.upper as i64),
        );
    }
    g.assert_no_positive_cycle()?;
    Ok(g)
}
