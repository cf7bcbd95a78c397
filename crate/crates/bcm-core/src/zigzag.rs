//! Two-legged forks and zigzag certificates.
//!
//! A fork bounds the gap between its two chain endpoints: the head arrives
//! no earlier than the lower-bound sum of its leg, the tail no later than
//! the upper-bound sum of its leg. Chaining forks head-to-tail along shared
//! process lines yields a zigzag whose weight lower-bounds the time from
//! the first tail to the last head — a certificate of timed precedence
//! that remains valid in every run realizing the pattern.

use serde_json::json;
use thiserror::Error;

use crate::causality::{congruent, happens_before, resolve_id, CausalityError, GeneralNode};
use crate::graph::{BoundsGraph, GraphNode, GraphTag};
use crate::network::{Network, NetworkError, ProcId, ProcPath};
use crate::sim::Run;
use crate::state::NodeId;

#[derive(Debug, Error)]
pub enum ZigzagError {
    #[error("invalid fork path: {0}")]
    InvalidPath(#[from] NetworkError),
    #[error("invalid pattern: {0}")]
    InvalidPattern(String),
    #[error("path does not support a certificate: {0}")]
    PathInvalid(String),
    #[error("not a constraint path: {0}")]
    NotAConstraintPath(String),
    #[error("pattern not realized in run")]
    PatternNotRealized,
    #[error(transparent)]
    Causality(#[from] CausalityError),
}

/// A base node with two outgoing message chains. `head = base ⊙ head_path`
/// arrives at least `lower(head_path)` after the base; `tail = base ⊙
/// tail_path` at most `upper(tail_path)` after it.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TwoLeggedFork {
    pub base: GeneralNode,
    pub head_path: ProcPath,
    pub tail_path: ProcPath,
}

impl TwoLeggedFork {
    pub fn new(
        base: GeneralNode,
        head_path: ProcPath,
        tail_path: ProcPath,
    ) -> Result<Self, ZigzagError> {
        let fork = TwoLeggedFork {
            base,
            head_path,
            tail_path,
        };
        fork.check_legs()?;
        Ok(fork)
    }

    /// The degenerate fork whose three nodes coincide.
    pub fn trivial(node: GeneralNode) -> Self {
        let leg = ProcPath::singleton(node.end_proc());
        TwoLeggedFork {
            base: node,
            head_path: leg.clone(),
            tail_path: leg,
        }
    }

    fn check_legs(&self) -> Result<(), ZigzagError> {
        if self.head_path.first() != self.base.end_proc()
            || self.tail_path.first() != self.base.end_proc()
        {
            return Err(ZigzagError::InvalidPattern(
                "fork legs must start at the base's terminal process".into(),
            ));
        }
        Ok(())
    }

    pub fn head(&self) -> GeneralNode {
        GeneralNode {
            base: self.base.base.clone(),
            path: self
                .base
                .path
                .compose(&self.head_path)
                .expect("leg starts at base end"),
        }
    }

    pub fn tail(&self) -> GeneralNode {
        GeneralNode {
            base: self.base.base.clone(),
            path: self
                .base
                .path
                .compose(&self.tail_path)
                .expect("leg starts at base end"),
        }
    }
}

/// Adjacency flag between consecutive forks. `Joined` pairs share a basic
/// node; a `Separated` head precedes the next tail strictly, contributing
/// one extra time unit to the weight.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Join {
    Joined,
    Separated,
}

/// A sequence of forks with join flags and the certified weight.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ZigzagCertificate {
    pub forks: Vec<TwoLeggedFork>,
    pub joins: Vec<Join>,
    pub weight: i64,
}

impl ZigzagCertificate {
    pub fn from_node(&self) -> GeneralNode {
        self.forks[0].tail()
    }

    pub fn to_node(&self) -> GeneralNode {
        self.forks.last().unwrap().head()
    }

    pub fn separation_count(&self) -> usize {
        self.joins
            .iter()
            .filter(|j| matches!(j, Join::Separated))
            .count()
    }

    /// Deterministic JSON rendering; keys sorted, node addresses `P@k/...`.
    pub fn to_json(&self, net: &Network) -> serde_json::Value {
        let addr = |n: &GeneralNode| {
            let mut s = format!("{}@{}", net.proc_name(n.base.proc()), n.base.index());
            for hop in &n.path.hops()[1..] {
                s.push('/');
                s.push_str(net.proc_name(*hop));
            }
            s
        };
        let path = |p: &ProcPath| {
            p.hops()
                .iter()
                .map(|h| net.proc_name(*h).to_owned())
                .collect::<Vec<_>>()
        };
        json!({
            "forks": self.forks.iter().map(|f| json!({
                "base": addr(&f.base),
                "head_path": path(&f.head_path),
                "tail_path": path(&f.tail_path),
            })).collect::<Vec<_>>(),
            "joins": self.joins.iter().map(|j| match j {
                Join::Joined => "joined",
                Join::Separated => "separated",
            }).collect::<Vec<_>>(),
            "weight": self.weight,
        })
    }
}

/// `lower(head leg) - upper(tail leg)`.
pub fn fork_weight(net: &Network, fork: &TwoLeggedFork) -> Result<i64, ZigzagError> {
    fork.check_legs()?;
    let lo = net.path_lower(&fork.head_path)?;
    let hi = net.path_upper(&fork.tail_path)?;
    Ok(lo as i64 - hi as i64)
}

/// Sum of fork weights plus one per separated pair. Checks structural
/// validity: legs anchored, adjacent head/tail on one process line.
pub fn zigzag_weight(
    net: &Network,
    forks: &[TwoLeggedFork],
    joins: &[Join],
) -> Result<i64, ZigzagError> {
    if forks.is_empty() {
        return Err(ZigzagError::InvalidPattern("empty fork sequence".into()));
    }
    if joins.len() + 1 != forks.len() {
        return Err(ZigzagError::InvalidPattern(
            "join count must be fork count - 1".into(),
        ));
    }
    let mut weight = 0i64;
    for fork in forks {
        weight += fork_weight(net, fork)?;
    }
    for (k, join) in joins.iter().enumerate() {
        if forks[k].head().end_proc() != forks[k + 1].tail().end_proc() {
            return Err(ZigzagError::InvalidPattern(format!(
                "fork {k} head and fork {} tail end on different processes",
                k + 1
            )));
        }
        if matches!(join, Join::Separated) {
            weight += 1;
        }
    }
    Ok(weight)
}

/// Checks that the certificate is realized in `run` between the two nodes:
/// endpoints congruent to `from`/`to`, every fork's nodes resolving, the
/// adjacency conditions holding per join flag, and the stored weight
/// matching the recomputed one. Failures answer `false`.
pub fn validate_zigzag(
    run: &Run,
    cert: &ZigzagCertificate,
    from: &GeneralNode,
    to: &GeneralNode,
) -> bool {
    let net = run.net();
    let recomputed = match zigzag_weight(net, &cert.forks, &cert.joins) {
        Ok(w) => w,
        Err(_) => return false,
    };
    if recomputed != cert.weight {
        return false;
    }
    if !congruent(run, &cert.from_node(), from) || !congruent(run, &cert.to_node(), to) {
        return false;
    }
    for fork in &cert.forks {
        if resolve_id(run, &fork.base).is_none()
            || resolve_id(run, &fork.head()).is_none()
            || resolve_id(run, &fork.tail()).is_none()
        {
            return false;
        }
    }
    for (k, join) in cert.joins.iter().enumerate() {
        let head = resolve_id(run, &cert.forks[k].head()).unwrap();
        let tail = resolve_id(run, &cert.forks[k + 1].tail()).unwrap();
        if head.proc != tail.proc {
            return false;
        }
        let ok = match join {
            Join::Joined => head == tail,
            Join::Separated => run.time(head).unwrap() < run.time(tail).unwrap(),
        };
        if !ok {
            return false;
        }
    }
    true
}

/// A zigzag is visible at the observer when every fork head except the last
/// lies in the observer's past (fixing the order of adjacent forks) and the
/// final fork's base chain starts inside the past.
pub fn is_visible(
    run: &Run,
    observer: NodeId,
    cert: &ZigzagCertificate,
) -> Result<bool, ZigzagError> {
    let c = cert.forks.len();
    for fork in cert.forks.iter().take(c - 1) {
        let head = resolve_id(run, &fork.head()).ok_or(ZigzagError::PatternNotRealized)?;
        if !happens_before(run, head, observer)? {
            return Ok(false);
        }
    }
    let base = match run.find(&cert.forks[c - 1].base.base) {
        Some(id) => id,
        None => return Ok(false),
    };
    happens_before(run, base, observer).map_err(Into::into)
}

fn classify_and_build(
    run: &Run,
    g: &BoundsGraph,
    nodes: &[NodeId],
    from: &GeneralNode,
    to: &GeneralNode,
) -> Result<(Vec<TwoLeggedFork>, Vec<Join>), ZigzagError> {
    if nodes.len() == 1 {
        return Ok((
            vec![
                TwoLeggedFork::trivial(from.clone()),
                TwoLeggedFork::trivial(to.clone()),
            ],
            vec![Join::Joined],
        ));
    }
    let a = nodes[0];
    let b = nodes[1];
    let weight = g
        .edge_weight(GraphNode::Basic(a), GraphNode::Basic(b))
        .ok_or_else(|| ZigzagError::PathInvalid(format!("no edge {a:?} -> {b:?}")))?;

    let from_b = GeneralNode::basic(run.node(b).expect("path node in run"));
    let (mut forks, mut joins) = classify_and_build(run, g, &nodes[1..], &from_b, to)?;

    let successor = a.proc == b.proc && b.index == a.index + 1 && weight == 1;
    let forward_msg = run
        .delivery_of(a, b.proc)
        .and_then(|d| run.node_at_time(b.proc, d.deliver_time))
        .is_some_and(|n| n == b)
        && run.net().bounds(a.proc, b.proc).map(|bd| bd.lower as i64) == Some(weight);
    let backward_msg = run
        .delivery_of(b, a.proc)
        .and_then(|d| run.node_at_time(a.proc, d.deliver_time))
        .is_some_and(|n| n == a)
        && run
            .net()
            .bounds(b.proc, a.proc)
            .map(|bd| -(bd.upper as i64))
            == Some(weight);

    if successor {
        // One time unit passes between consecutive states of a process.
        forks.insert(0, TwoLeggedFork::trivial(from.clone()));
        joins.insert(0, Join::Separated);
    } else if forward_msg {
        // Ride the delivered message: the new fork's head lands on b.
        let head_path = ProcPath::new(vec![a.proc, b.proc]).unwrap();
        let tail_path = ProcPath::singleton(a.proc);
        forks.insert(0, TwoLeggedFork::new(from.clone(), head_path, tail_path)?);
        joins.insert(0, Join::Joined);
    } else if backward_msg {
        // Walk an upper bound backwards: extend the next fork's tail by the
        // hop b -> a, which resolves to a.
        forks[0] = TwoLeggedFork::new(
            forks[0].base.clone(),
            forks[0].head_path.clone(),
            forks[0].tail_path.extend(a.proc),
        )?;
        forks.insert(0, TwoLeggedFork::trivial(from.clone()));
        joins.insert(0, Join::Joined);
    } else {
        return Err(ZigzagError::PathInvalid(format!(
            "edge {a:?} -> {b:?} with weight {weight} matches no construction case"
        )));
    }
    Ok((forks, joins))
}

/// Turns a path between basic nodes of a bounds graph into a zigzag
/// certificate of exactly the path's weight, from `from` to `to` (whose
/// resolutions must be the path endpoints).
pub fn zigzag_from_path(
    run: &Run,
    g: &BoundsGraph,
    nodes: &[NodeId],
    from: &GeneralNode,
    to: &GeneralNode,
) -> Result<ZigzagCertificate, ZigzagError> {
    if nodes.is_empty() {
        return Err(ZigzagError::PathInvalid("empty node list".into()));
    }
    if resolve_id(run, from) != Some(nodes[0]) {
        return Err(ZigzagError::PathInvalid(
            "`from` does not resolve to the path start".into(),
        ));
    }
    if resolve_id(run, to) != Some(*nodes.last().unwrap()) {
        return Err(ZigzagError::PathInvalid(
            "`to` does not resolve to the path end".into(),
        ));
    }
    let (forks, joins) = classify_and_build(run, g, nodes, from, to)?;
    let weight = zigzag_weight(run.net(), &forks, &joins)?;
    let mut path_weight = 0;
    for pair in nodes.windows(2) {
        path_weight += g
            .edge_weight(GraphNode::Basic(pair[0]), GraphNode::Basic(pair[1]))
            .expect("validated above");
    }
    debug_assert_eq!(
        weight, path_weight,
        "certificate weight must equal path weight"
    );
    Ok(ZigzagCertificate {
        forks,
        joins,
        weight,
    })
}

/// A path through an extended bounds graph together with a final chain
/// extension: the certificate's last head is the path's implied endpoint
/// chained along `head_extension`.
#[derive(Clone, Debug)]
pub struct ConstraintPath {
    pub nodes: Vec<GraphNode>,
    pub head_extension: ProcPath,
}

struct Assembly {
    forks: Vec<TwoLeggedFork>,
    joins: Vec<Join>,
}

impl Assembly {
    fn new() -> Self {
        Assembly {
            forks: Vec::new(),
            joins: Vec::new(),
        }
    }

    fn append(&mut self, connect: Join, forks: Vec<TwoLeggedFork>, joins: Vec<Join>) {
        if !self.forks.is_empty() {
            self.joins.push(connect);
        }
        self.forks.extend(forks);
        self.joins.extend(joins);
    }
}

/// Builds a visible zigzag from a constraint path of the observer's
/// extended graph `g` (tag must be `Extended`). The certificate runs from
/// `from` to `to`; its weight equals the path weight plus the lower-bound
/// sum of the head extension.
pub fn visible_zigzag_from_constraint_path(
    run: &Run,
    g: &BoundsGraph,
    cpath: &ConstraintPath,
    from: &GeneralNode,
    to: &GeneralNode,
) -> Result<ZigzagCertificate, ZigzagError> {
    let GraphTag::Extended(_) = g.tag() else {
        return Err(ZigzagError::NotAConstraintPath(
            "graph is not an extended graph".into(),
        ));
    };
    let nodes = &cpath.nodes;
    if nodes.is_empty() {
        return Err(ZigzagError::NotAConstraintPath("empty path".into()));
    }
    let mut path_weight = 0i64;
    for pair in nodes.windows(2) {
        path_weight += g.edge_weight(pair[0], pair[1]).ok_or_else(|| {
            ZigzagError::NotAConstraintPath(format!("missing edge {:?} -> {:?}", pair[0], pair[1]))
        })?;
    }

    // Pull the implied pre-extension endpoint out of `to`.
    let ext = &cpath.head_extension;
    let ext_hops = ext.hop_count();
    if to.path.hop_count() < ext_hops || to.path.suffix(to.path.hop_count() - ext_hops) != *ext {
        return Err(ZigzagError::NotAConstraintPath(
            "head extension is not a suffix of the target node's path".into(),
        ));
    }
    let pre_end = GeneralNode {
        base: to.base.clone(),
        path: to.path.prefix(to.path.hop_count() - ext_hops),
    };
    let final_head_path = |fallback: ProcId| {
        if ext_hops == 0 {
            ProcPath::singleton(fallback)
        } else {
            ext.clone()
        }
    };

    let first_basic = nodes.iter().position(|n| matches!(n, GraphNode::Basic(_)));

    // Auxiliaries only: `from` must extend the pre-extension endpoint along
    // the reversed walk, and one fork certifies the whole constraint.
    let Some(fb) = first_basic else {
        let mut q: Vec<ProcId> = nodes
            .iter()
            .map(|n| match n {
                GraphNode::Aux(p) => *p,
                GraphNode::Basic(_) => unreachable!(),
            })
            .collect();
        q.reverse();
        let q = ProcPath::new(q).unwrap();
        if q.first() != pre_end.end_proc() {
            return Err(ZigzagError::NotAConstraintPath(
                "auxiliary walk does not start at the implied endpoint's process".into(),
            ));
        }
        let tail = pre_end.chain(&q)?;
        if !congruent(run, &tail, from) {
            return Err(ZigzagError::NotAConstraintPath(
                "source node does not extend the target endpoint along the walk".into(),
            ));
        }
        let head_path = final_head_path(pre_end.end_proc());
        let fork = TwoLeggedFork::new(pre_end, head_path, q)?;
        let weight = zigzag_weight(run.net(), std::slice::from_ref(&fork), &[])?;
        debug_assert_eq!(weight, path_weight + run.net().path_lower(ext)? as i64);
        return Ok(ZigzagCertificate {
            forks: vec![fork],
            joins: vec![],
            weight,
        });
    };

    let last_basic = nodes
        .iter()
        .rposition(|n| matches!(n, GraphNode::Basic(_)))
        .unwrap();
    let basic_at = |i: usize| match nodes[i] {
        GraphNode::Basic(id) => id,
        GraphNode::Aux(_) => unreachable!(),
    };

    let mut assembly = Assembly::new();

    // Leading auxiliary prefix: `from` reaches the first basic node and
    // continues along the reversed walked processes.
    if fb > 0 {
        let mut lead: Vec<ProcId> = (0..fb)
            .map(|i| match nodes[i] {
                GraphNode::Aux(p) => p,
                GraphNode::Basic(_) => unreachable!(),
            })
            .collect();
        lead.reverse();
        let v = basic_at(fb);
        let hop_count = lead.len();
        if from.path.hop_count() < hop_count {
            return Err(ZigzagError::NotAConstraintPath(
                "source path shorter than the leading auxiliary walk".into(),
            ));
        }
        let split = from.path.hop_count() - hop_count;
        let anchor = GeneralNode {
            base: from.base.clone(),
            path: from.path.prefix(split),
        };
        let tail_path = from.path.suffix(split);
        if resolve_id(run, &anchor) != Some(v) || tail_path.hops()[1..] != lead[..] {
            return Err(ZigzagError::NotAConstraintPath(
                "source node does not match the leading auxiliary walk".into(),
            ));
        }
        let head_path = ProcPath::singleton(anchor.end_proc());
        assembly.append(
            Join::Joined,
            vec![TwoLeggedFork::new(anchor, head_path, tail_path)?],
            vec![],
        );
    }

    // Middle: alternate runs of basic nodes and internal auxiliary walks.
    let mut i = fb;
    let mut current = if fb == 0 {
        if resolve_id(run, from) != Some(basic_at(0)) {
            return Err(ZigzagError::NotAConstraintPath(
                "source node does not resolve to the path start".into(),
            ));
        }
        from.clone()
    } else {
        GeneralNode::basic(run.node(basic_at(fb)).expect("node in run"))
    };
    let mut trailing_aux: Option<Vec<ProcId>> = None;
    while i <= last_basic {
        let mut j = i;
        while j < nodes.len() - 1 && matches!(nodes[j + 1], GraphNode::Basic(_)) {
            j += 1;
        }
        let seg: Vec<NodeId> = (i..=j).map(basic_at).collect();
        let ends_path = j == last_basic && last_basic == nodes.len() - 1;
        let target = if ends_path {
            if resolve_id(run, &pre_end) != Some(seg[seg.len() - 1]) {
                return Err(ZigzagError::NotAConstraintPath(
                    "target endpoint does not resolve to the path end".into(),
                ));
            }
            pre_end.clone()
        } else {
            GeneralNode::basic(run.node(seg[seg.len() - 1]).expect("node in run"))
        };
        let (forks, joins) = classify_and_build(run, g, &seg, &current, &target)?;
        assembly.append(Join::Joined, forks, joins);

        if j == last_basic {
            if last_basic < nodes.len() - 1 {
                let procs: Vec<ProcId> = (last_basic + 1..nodes.len())
                    .map(|k| match nodes[k] {
                        GraphNode::Aux(p) => p,
                        GraphNode::Basic(_) => unreachable!(),
                    })
                    .collect();
                trailing_aux = Some(procs);
            }
            break;
        }

        // Internal walk: from a boundary node through auxiliaries to the
        // next basic node, which sent a message past the observer's view.
        let mut k = j + 1;
        let mut walk: Vec<ProcId> = Vec::new();
        while k < nodes.len() && matches!(nodes[k], GraphNode::Aux(_)) {
            if let GraphNode::Aux(p) = nodes[k] {
                walk.push(p);
            }
            k += 1;
        }
        let reentry = basic_at(k);
        let reentry_node = GeneralNode::basic(run.node(reentry).expect("node in run"));
        let mut tail_hops = vec![reentry.proc];
        tail_hops.extend(walk.iter().rev().copied());
        let fork = TwoLeggedFork::new(
            reentry_node.clone(),
            ProcPath::singleton(reentry.proc),
            ProcPath::new(tail_hops).unwrap(),
        )?;
        assembly.append(Join::Separated, vec![fork], vec![]);
        current = reentry_node;
        i = k;
    }

    if let Some(walk) = trailing_aux {
        // The pre-extension endpoint lies past the observer's view on the
        // final walked process; relayed down the walk, its chain lands
        // strictly after the boundary node that opened the walk.
        if pre_end.path.is_singleton() {
            return Err(ZigzagError::NotAConstraintPath(
                "trailing walk needs a non-singleton target chain".into(),
            ));
        }
        if pre_end.end_proc() != *walk.last().unwrap() {
            return Err(ZigzagError::NotAConstraintPath(
                "target endpoint does not end at the walked process".into(),
            ));
        }
        // The walk starts at the boundary's own auxiliary, so reversing it
        // is the whole relay chain back to the boundary's line.
        let tail_hops: Vec<ProcId> = walk.iter().rev().copied().collect();
        let head_path = final_head_path(pre_end.end_proc());
        let fork = TwoLeggedFork::new(pre_end, head_path, ProcPath::new(tail_hops).unwrap())?;
        assembly.append(Join::Separated, vec![fork], vec![]);
    } else if ext_hops > 0 {
        let last = assembly.forks.last_mut().unwrap();
        let head_path = last.head_path.compose(ext).map_err(|e| {
            ZigzagError::NotAConstraintPath(format!("head extension does not compose: {e}"))
        })?;
        *last = TwoLeggedFork::new(last.base.clone(), head_path, last.tail_path.clone())?;
    }

    let weight = zigzag_weight(run.net(), &assembly.forks, &assembly.joins)?;
    let expected = path_weight + run.net().path_lower(ext)? as i64;
    if weight != expected {
        return Err(ZigzagError::NotAConstraintPath(format!(
            "constructed weight {weight} does not match path weight {expected}"
        )));
    }
    Ok(ZigzagCertificate {
        forks: assembly.forks,
        joins: assembly.joins,
        weight,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::graph::build_basic;
    use crate::sim::{execute, Schedule};

    fn nid(run: &Run, name: &str, k: u32) -> NodeId {
        NodeId::new(run.net().proc_id(name).unwrap(), k)
    }

    fn gnode(run: &Run, name: &str, k: u32, path: &[&str]) -> GeneralNode {
        let base = run.node(nid(run, name, k)).unwrap();
        let hops = path.iter().map(|p| run.net().proc_id(p).unwrap()).collect();
        GeneralNode::new(base, ProcPath::new(hops).unwrap()).unwrap()
    }

    fn ppath(run: &Run, names: &[&str]) -> ProcPath {
        ProcPath::new(
            names
                .iter()
                .map(|n| run.net().proc_id(n).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn fork_weights() {
        let net = corpus::fork_net();
        let run = execute(
            net.clone(),
            &corpus::go_externals(&net),
            &Schedule::Latest,
            10,
        )
        .unwrap();
        let fork = TwoLeggedFork::new(
            gnode(&run, "C", 1, &["C"]),
            ppath(&run, &["C", "B"]),
            ppath(&run, &["C", "A"]),
        )
        .unwrap();
        assert_eq!(fork_weight(run.net(), &fork).unwrap(), 2);

        let trivial = TwoLeggedFork::trivial(gnode(&run, "C", 1, &["C"]));
        assert_eq!(fork_weight(run.net(), &trivial).unwrap(), 0);
    }

    #[test]
    fn s1_fork_weight() {
        let net = corpus::zigzag_net();
        let run = corpus::separated_zigzag_run(net, 14);
        let fork = TwoLeggedFork::new(
            gnode(&run, "C", 1, &["C"]),
            ppath(&run, &["C", "D"]),
            ppath(&run, &["C", "A"]),
        )
        .unwrap();
        assert_eq!(fork_weight(run.net(), &fork).unwrap(), 4);
    }

    #[test]
    fn separated_zigzag_weight_is_six() {
        let net = corpus::zigzag_net();
        let run = corpus::separated_zigzag_run(net, 14);
        // Fork 1: base C@1, head along C->D (lower 6), tail along C->A
        // (upper 2): weight 4. Fork 2: base E@1, head along E->B (lower 3),
        // tail along E->D (upper 2): weight 1. Separated at D: +1.
        let f1 = TwoLeggedFork::new(
            gnode(&run, "C", 1, &["C"]),
            ppath(&run, &["C", "D"]),
            ppath(&run, &["C", "A"]),
        )
        .unwrap();
        let f2 = TwoLeggedFork::new(
            gnode(&run, "E", 1, &["E"]),
            ppath(&run, &["E", "B"]),
            ppath(&run, &["E", "D"]),
        )
        .unwrap();
        let weight =
            zigzag_weight(run.net(), &[f1.clone(), f2.clone()], &[Join::Separated]).unwrap();
        assert_eq!(weight, 6);

        let cert = ZigzagCertificate {
            forks: vec![f1, f2],
            joins: vec![Join::Separated],
            weight,
        };
        let from = gnode(&run, "C", 1, &["C", "A"]);
        let to = gnode(&run, "E", 1, &["E", "B"]);
        assert!(validate_zigzag(&run, &cert, &from, &to));

        // Swapping the forks breaks adjacency.
        let mut swapped = cert.clone();
        swapped.forks.reverse();
        assert!(!validate_zigzag(&run, &swapped, &from, &to));
    }

    #[test]
    fn separated_flag_requires_strictly_earlier_heads() {
        let net = corpus::zigzag_net();
        let run = corpus::separated_zigzag_run(net, 14);
        // Adjacent forks meeting at the same basic node are joined; the
        // separated flag (which pays +1) must be rejected there.
        let f1 = TwoLeggedFork::new(
            gnode(&run, "C", 1, &["C"]),
            ppath(&run, &["C", "D"]),
            ppath(&run, &["C", "A"]),
        )
        .unwrap();
        let f2 = TwoLeggedFork::trivial(gnode(&run, "D", 1, &["D"]));
        let from = gnode(&run, "C", 1, &["C", "A"]);
        let to = gnode(&run, "D", 1, &["D"]);
        let joined = ZigzagCertificate {
            forks: vec![f1.clone(), f2.clone()],
            joins: vec![Join::Joined],
            weight: 4,
        };
        assert!(validate_zigzag(&run, &joined, &from, &to));
        let separated = ZigzagCertificate {
            forks: vec![f1, f2],
            joins: vec![Join::Separated],
            weight: 5,
        };
        assert!(!validate_zigzag(&run, &separated, &from, &to));
    }

    #[test]
    fn joined_trivial_forks_weigh_zero() {
        let net = corpus::fork_net();
        let run = execute(
            net.clone(),
            &corpus::go_externals(&net),
            &Schedule::Latest,
            10,
        )
        .unwrap();
        let n = gnode(&run, "C", 1, &["C"]);
        let forks = vec![TwoLeggedFork::trivial(n.clone()), TwoLeggedFork::trivial(n)];
        assert_eq!(
            zigzag_weight(run.net(), &forks, &[Join::Joined]).unwrap(),
            0
        );
    }

    #[test]
    fn path_to_zigzag_on_fork_net() {
        let net = corpus::fork_net();
        let run = execute(
            net.clone(),
            &corpus::go_externals(&net),
            &Schedule::Latest,
            10,
        )
        .unwrap();
        let g = build_basic(&run).unwrap();
        // A@1 -> C@1 -> B@1, weight -3 + 5 = 2.
        let nodes = vec![nid(&run, "A", 1), nid(&run, "C", 1), nid(&run, "B", 1)];
        let from = gnode(&run, "A", 1, &["A"]);
        let to = gnode(&run, "B", 1, &["B"]);
        let cert = zigzag_from_path(&run, &g, &nodes, &from, &to).unwrap();
        assert_eq!(cert.weight, 2);
        assert!(validate_zigzag(&run, &cert, &from, &to));
    }

    #[test]
    fn empty_path_gives_joined_trivial_pair() {
        let net = corpus::fork_net();
        let run = execute(
            net.clone(),
            &corpus::go_externals(&net),
            &Schedule::Latest,
            10,
        )
        .unwrap();
        let g = build_basic(&run).unwrap();
        let from = gnode(&run, "C", 1, &["C"]);
        let to = gnode(&run, "C", 1, &["C"]);
        let cert = zigzag_from_path(&run, &g, &[nid(&run, "C", 1)], &from, &to).unwrap();
        assert_eq!(cert.weight, 0);
        assert_eq!(cert.forks.len(), 2);
        assert!(validate_zigzag(&run, &cert, &from, &to));
    }

    #[test]
    fn zigzag_extraction_matches_separated_path() {
        let net = corpus::zigzag_net();
        let run = corpus::separated_zigzag_run(net, 14);
        let g = build_basic(&run).unwrap();
        // A@1 -> C@1 -> D@1 -> D@2 -> E@1 -> B@1: -2 + 6 + 1 - 2 + 3 = 6.
        let nodes = vec![
            nid(&run, "A", 1),
            nid(&run, "C", 1),
            nid(&run, "D", 1),
            nid(&run, "D", 2),
            nid(&run, "E", 1),
            nid(&run, "B", 1),
        ];
        let from = gnode(&run, "A", 1, &["A"]);
        let to = gnode(&run, "B", 1, &["B"]);
        let cert = zigzag_from_path(&run, &g, &nodes, &from, &to).unwrap();
        assert_eq!(cert.weight, 6);
        assert_eq!(cert.separation_count(), 1);
        assert!(validate_zigzag(&run, &cert, &from, &to));
    }

    #[test]
    fn certificate_json_is_deterministic() {
        let net = corpus::fork_net();
        let run = execute(
            net.clone(),
            &corpus::go_externals(&net),
            &Schedule::Latest,
            10,
        )
        .unwrap();
        let g = build_basic(&run).unwrap();
        let nodes = vec![nid(&run, "A", 1), nid(&run, "C", 1), nid(&run, "B", 1)];
        let from = gnode(&run, "A", 1, &["A"]);
        let to = gnode(&run, "B", 1, &["B"]);
        let cert = zigzag_from_path(&run, &g, &nodes, &from, &to).unwrap();
        let one = serde_json::to_string(&cert.to_json(run.net())).unwrap();
        let two = serde_json::to_string(&cert.to_json(run.net())).unwrap();
        assert_eq!(one, two);
        assert!(one.contains("\"weight\":2"));
    }
}
