//! Happens-before, pasts, and general nodes.
//!
//! A general node `<base, path>` names the point where the FFIP message
//! chain leaving `base` along `path` is received; it lets a process talk
//! about timeline points it has not observed.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::network::{ProcId, ProcPath};
use crate::sim::Run;
use crate::state::{BasicNode, NodeId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CausalityError {
    #[error("node {0:?} does not appear in the run")]
    NodeAbsent(NodeId),
    #[error("general node path must start at the base process")]
    PathBaseMismatch,
}

/// A chain endpoint: the basic node reached by following the message chain
/// leaving `base` along `path`. A singleton path denotes `base` itself.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct GeneralNode {
    pub base: BasicNode,
    pub path: ProcPath,
}

impl GeneralNode {
    pub fn new(base: BasicNode, path: ProcPath) -> Result<Self, CausalityError> {
        if path.first() != base.proc() {
            return Err(CausalityError::PathBaseMismatch);
        }
        Ok(GeneralNode { base, path })
    }

    pub fn basic(base: BasicNode) -> Self {
        let path = ProcPath::singleton(base.proc());
        GeneralNode { base, path }
    }

    /// Terminal process of the chain.
    pub fn end_proc(&self) -> ProcId {
        self.path.last()
    }

    /// The node one more chain along `q`: `<base, path ⊙ q>`.
    pub fn chain(&self, q: &ProcPath) -> Result<GeneralNode, CausalityError> {
        let path = self
            .path
            .compose(q)
            .map_err(|_| CausalityError::PathBaseMismatch)?;
        Ok(GeneralNode {
            base: self.base.clone(),
            path,
        })
    }
}

/// Minimal timestamp at which the process holds the node's state, or `None`
/// when the state never arises in the run.
pub fn time_of(run: &Run, node: &BasicNode) -> Option<u32> {
    run.find(node).and_then(|id| run.time(id))
}

/// Direct happens-before predecessors of a node: its same-line predecessor
/// and the sender of every message in its batch.
fn direct_predecessors(run: &Run, id: NodeId) -> Vec<NodeId> {
    let mut preds = Vec::new();
    if id.index > 0 {
        preds.push(NodeId::new(id.proc, id.index - 1));
        let time = run.time(id).expect("node exists");
        for d in run
            .deliveries()
            .iter()
            .filter(|d| d.msg.dst == id.proc && d.deliver_time == time)
        {
            preds.push(NodeId::new(d.msg.src, d.msg.src_index));
        }
    }
    preds
}

/// All happens-before predecessors of `node`, including the node itself.
pub fn past(run: &Run, node: NodeId) -> Result<BTreeSet<NodeId>, CausalityError> {
    if run.time(node).is_none() {
        return Err(CausalityError::NodeAbsent(node));
    }
    let mut seen: BTreeSet<NodeId> = BTreeSet::new();
    let mut queue = VecDeque::from([node]);
    seen.insert(node);
    while let Some(next) = queue.pop_front() {
        for pred in direct_predecessors(run, next) {
            if seen.insert(pred) {
                queue.push_back(pred);
            }
        }
    }
    Ok(seen)
}

/// Lamport's happens-before over basic nodes of a run (reflexive).
pub fn happens_before(run: &Run, earlier: NodeId, later: NodeId) -> Result<bool, CausalityError> {
    if run.time(earlier).is_none() {
        return Err(CausalityError::NodeAbsent(earlier));
    }
    Ok(past(run, later)?.contains(&earlier))
}

/// Follows the FFIP message chain from the node's base along its path.
/// `None` when a hop's delivery lies past the horizon, when the base never
/// sends (initial nodes receive nothing, so no chain leaves them), or when
/// the base does not appear in the run.
pub fn resolve_id(run: &Run, node: &GeneralNode) -> Option<NodeId> {
    let mut at = run.find(&node.base)?;
    for hop in node.path.hops().windows(2) {
        if at.index == 0 {
            return None;
        }
        let delivery = run.delivery_of(at, hop[1])?;
        at = run.node_at_time(hop[1], delivery.deliver_time)?;
    }
    Some(at)
}

/// Like [`resolve_id`] but returns the canonical node.
pub fn resolve(run: &Run, node: &GeneralNode) -> Option<BasicNode> {
    resolve_id(run, node).and_then(|id| run.node(id))
}

pub fn time_of_general(run: &Run, node: &GeneralNode) -> Option<u32> {
    resolve_id(run, node).and_then(|id| run.time(id))
}

/// A general node is recognized at `observer` when its base lies in the
/// observer's past: the observer then knows the chain endpoint appears.
pub fn is_recognized(
    run: &Run,
    observer: NodeId,
    node: &GeneralNode,
) -> Result<bool, CausalityError> {
    let base = match run.find(&node.base) {
        Some(id) => id,
        None => return Ok(false),
    };
    happens_before(run, base, observer)
}

/// Per process, the latest node of that process in the observer's past.
/// Processes with no node in the past are absent from the map.
pub fn boundary_nodes(
    run: &Run,
    observer: NodeId,
) -> Result<BTreeMap<ProcId, NodeId>, CausalityError> {
    let mut map: BTreeMap<ProcId, NodeId> = BTreeMap::new();
    for id in past(run, observer)? {
        let entry = map.entry(id.proc).or_insert(id);
        if id.index > entry.index {
            *entry = id;
        }
    }
    Ok(map)
}

/// Splits a general node at the last chain hop whose receipt lies inside
/// `region` (a set of node ids of this run). Returns the basic node reached
/// by the in-region prefix and the remaining suffix path. The base itself
/// must lie in `region`.
pub fn split_at_region(
    run: &Run,
    node: &GeneralNode,
    region: &BTreeSet<NodeId>,
) -> Option<(NodeId, ProcPath)> {
    let mut cursor = run.find(&node.base)?;
    if !region.contains(&cursor) {
        return None;
    }
    let mut split = 0;
    for (k, hop) in node.path.hops().windows(2).enumerate() {
        if cursor.index == 0 {
            break;
        }
        let delivery = match run.delivery_of(cursor, hop[1]) {
            Some(d) => d,
            None => break,
        };
        let next = match run.node_at_time(hop[1], delivery.deliver_time) {
            Some(n) => n,
            None => break,
        };
        if !region.contains(&next) {
            break;
        }
        cursor = next;
        split = k + 1;
    }
    Some((cursor, node.path.suffix(split)))
}

/// Run-level congruence: two general nodes denote the same chain when their
/// maximal resolvable prefixes land on the same basic node and the leftover
/// hop lists agree. FFIP sends exactly one message per channel per state
/// change, so congruent nodes resolve identically wherever both appear.
pub fn congruent(run: &Run, a: &GeneralNode, b: &GeneralNode) -> bool {
    if a == b {
        return true;
    }
    match (resolvable_split(run, a), resolvable_split(run, b)) {
        (Some((at_a, rest_a)), Some((at_b, rest_b))) => {
            at_a == at_b && rest_a.hops()[1..] == rest_b.hops()[1..]
        }
        _ => false,
    }
}

fn resolvable_split(run: &Run, node: &GeneralNode) -> Option<(NodeId, ProcPath)> {
    let all: BTreeSet<NodeId> = run.node_ids().into_iter().collect();
    split_at_region(run, node, &all)
}
