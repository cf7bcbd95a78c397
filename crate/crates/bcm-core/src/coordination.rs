//! Knowledge of timed precedence, with certificates, and the optimal
//! Early/Late coordination protocols built on it.
//!
//! The decision works on the observer's extended bounds graph: the best
//! provable lead of one chain endpoint over another is the maximum, over
//! the ways the target chain can be cut, of a longest constraint path plus
//! the lower-bound sum of the remaining chain. A fast run realizes that
//! maximum, so nothing stronger is knowable, and the maximizing path yields
//! a visible zigzag certificate witnessing the verdict.

use thiserror::Error;

use crate::causality::{past, resolve_id, split_at_region, CausalityError, GeneralNode};
use crate::graph::{build_extended, GraphError, GraphNode};
use crate::network::{Network, ProcId, ProcPath};
use crate::sim::{execute, ExternalInput, Run, Schedule, SimError};
use crate::state::NodeId;
use crate::zigzag::{
    is_visible, validate_zigzag, visible_zigzag_from_constraint_path, ConstraintPath,
    ZigzagCertificate, ZigzagError,
};

#[derive(Debug, Error)]
pub enum CoordError {
    #[error("node is not recognized at the observer")]
    NotRecognized,
    #[error("node resolves to an initial node")]
    TimeZeroBase,
    #[error("node does not resolve within the horizon")]
    NodeUnresolved,
    #[error("malformed task: {0}")]
    TaskMalformed(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Causality(#[from] CausalityError),
    #[error(transparent)]
    Zigzag(#[from] ZigzagError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TaskKind {
    /// B acts at least `x` before A.
    Early,
    /// B acts at least `x` after A.
    Late,
}

/// A coordination task: A acts when the trigger process's go input reaches
/// it; B must act `x` apart from A per `kind`, and only if A acts.
#[derive(Clone, Debug)]
pub struct CoordinationTask {
    pub kind: TaskKind,
    pub actor_a: ProcId,
    pub actor_b: ProcId,
    pub trigger: ProcId,
    pub x: i64,
}

/// Outcome of a knowledge query. `max_weight` is the largest provable lead
/// (`None` when no constraint path exists, so knowledge fails for every
/// bound); when the verdict holds, the certificate witnesses it.
#[derive(Clone, Debug)]
pub struct KnowledgeVerdict {
    pub holds: bool,
    pub certificate: Option<ZigzagCertificate>,
    pub max_weight: Option<i64>,
}

struct Split {
    value: i64,
    cpath: ConstraintPath,
}

/// Splits in descending value order; the head is the decision value.
struct Splits {
    candidates: Vec<Split>,
}

impl Splits {
    fn new() -> Self {
        Splits {
            candidates: Vec::new(),
        }
    }

    fn consider(&mut self, value: i64, cpath: ConstraintPath) {
        self.candidates.push(Split { value, cpath });
    }

    fn into_sorted(mut self) -> Vec<Split> {
        self.candidates.sort_by_key(|s| std::cmp::Reverse(s.value));
        self.candidates
    }
}

/// Decides whether the observer knows that `first` occurs at least `x`
/// time units before `second`, and produces a maximal-weight visible
/// zigzag certificate from `first` to `second`.
pub fn knows_precedence(
    run: &Run,
    observer: NodeId,
    first: &GeneralNode,
    second: &GeneralNode,
    x: i64,
) -> Result<KnowledgeVerdict, CoordError> {
    let visible = past(run, observer)?;
    for node in [first, second] {
        let base = run.find(&node.base).ok_or(CoordError::NotRecognized)?;
        if !visible.contains(&base) {
            return Err(CoordError::NotRecognized);
        }
        let resolved = resolve_id(run, node).ok_or(CoordError::NodeUnresolved)?;
        if run.time(resolved) == Some(0) {
            return Err(CoordError::TimeZeroBase);
        }
    }

    // Work with the effective chains: the last node inside the observer's
    // past, plus the suffix leaving it. Everything the observer knows about
    // either chain is anchored there.
    let (src, src_suffix) = split_at_region(run, first, &visible).expect("base in past");
    let (dst, dst_suffix) = split_at_region(run, second, &visible).expect("base in past");

    let g = build_extended(run, observer)?;
    let lp = g.longest_from(GraphNode::Basic(src))?;
    let net = run.net();
    let src_upper = net
        .path_upper(&src_suffix)
        .expect("suffix is a network path") as i64;

    let mut splits = Splits::new();
    let mut consider = |value: i64, cpath: ConstraintPath| splits.consider(value, cpath);

    // Reversed suffix processes of the source chain: the auxiliary walk
    // certifying its upper bounds, prefixed to every longest-path spine.
    let lead_nodes: Vec<GraphNode> = src_suffix.hops()[1..]
        .iter()
        .rev()
        .map(|p| GraphNode::Aux(*p))
        .collect();

    for cut in 0..=dst_suffix.hop_count() {
        let remainder = dst_suffix.suffix(cut);
        let remainder_lower = net
            .path_lower(&remainder)
            .expect("suffix is a network path") as i64;
        let ext = if remainder.is_singleton() {
            ProcPath::singleton(remainder.first())
        } else {
            remainder.clone()
        };
        let target = if cut == 0 {
            GraphNode::Basic(dst)
        } else {
            GraphNode::Aux(dst_suffix.hops()[cut])
        };
        if let Some(reach) = g.distance(&lp, target).expect("node in graph") {
            let spine = g
                .longest_path_nodes(GraphNode::Basic(src), target)
                .expect("nodes in graph")
                .expect("reachable");
            let mut nodes = lead_nodes.clone();
            nodes.extend(spine);
            consider(
                -src_upper + reach + remainder_lower,
                ConstraintPath {
                    nodes,
                    head_extension: ext.clone(),
                },
            );
        }

        // When the target chain is a prefix of the source chain, the upper
        // bounds of the leftover hops alone certify the gap.
        if dst == src
            && cut <= src_suffix.hop_count()
            && dst_suffix.hops()[..=cut] == src_suffix.hops()[..=cut]
        {
            let leftover = src_suffix.suffix(cut);
            let leftover_upper =
                net.path_upper(&leftover).expect("suffix is a network path") as i64;
            let nodes: Vec<GraphNode> = leftover
                .hops()
                .iter()
                .rev()
                .map(|p| GraphNode::Aux(*p))
                .collect();
            consider(
                -leftover_upper + remainder_lower,
                ConstraintPath {
                    nodes,
                    head_extension: ext,
                },
            );
        }
    }

    let candidates = splits.into_sorted();
    let Some(max_weight) = candidates.first().map(|s| s.value) else {
        // No constraint path reaches the target's chain: the environment
        // can push it arbitrarily early, so no bound is knowable.
        return Ok(KnowledgeVerdict {
            holds: false,
            certificate: None,
            max_weight: None,
        });
    };

    // Prefer the strongest certificate checkable inside this prefix: a
    // truncated horizon can cut the relay chains of a stronger pattern,
    // in which case a weaker split still witnesses a correct (if not
    // maximal) bound and the maximal one stands on the chain obligations.
    let mut certificate = None;
    for split in &candidates {
        let cert = visible_zigzag_from_constraint_path(run, &g, &split.cpath, first, second)?;
        debug_assert_eq!(cert.weight, split.value);
        if validate_zigzag(run, &cert, first, second)
            && matches!(is_visible(run, observer, &cert), Ok(true))
        {
            certificate = Some(cert);
            break;
        }
        debug_assert!(
            run.truncated(),
            "only truncation may cut a constructed certificate"
        );
    }
    if certificate.is_none() {
        certificate = Some(visible_zigzag_from_constraint_path(
            run,
            &g,
            &candidates[0].cpath,
            first,
            second,
        )?);
    }
    Ok(KnowledgeVerdict {
        holds: max_weight >= x,
        certificate,
        max_weight: Some(max_weight),
    })
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Decision {
    Act,
    Wait,
}

/// The go node: the earliest node of the trigger process that received an
/// external input in this run.
pub fn go_node(run: &Run, trigger: ProcId) -> Option<NodeId> {
    run.externals()
        .iter()
        .filter(|e| e.target == trigger)
        .map(|e| e.time)
        .min()
        .and_then(|t| run.node_at_time(trigger, t))
}

/// The node at which A acts: the trigger's go message chained to A.
pub fn action_node(run: &Run, task: &CoordinationTask) -> Result<Option<GeneralNode>, CoordError> {
    if run.net().bounds(task.trigger, task.actor_a).is_none() {
        return Err(CoordError::TaskMalformed(format!(
            "no channel {} -> {}",
            run.net().proc_name(task.trigger),
            run.net().proc_name(task.actor_a)
        )));
    }
    let Some(go) = go_node(run, task.trigger) else {
        return Ok(None);
    };
    let base = run.node(go).expect("go node in run");
    let path = ProcPath::new(vec![task.trigger, task.actor_a]).unwrap();
    Ok(Some(
        GeneralNode::new(base, path).expect("path starts at trigger"),
    ))
}

/// B's rule at one of its nodes: act iff it knows the required precedence
/// between A's action node and its own current node. Waits when the go is
/// not yet in its past or the decision cannot settle in this prefix.
pub fn protocol_decision(
    run: &Run,
    task: &CoordinationTask,
    observer: NodeId,
) -> Result<(Decision, Option<KnowledgeVerdict>), CoordError> {
    if observer.proc != task.actor_b {
        return Err(CoordError::TaskMalformed(
            "observer is not the acting process".into(),
        ));
    }
    let Some(a_node) = action_node(run, task)? else {
        return Ok((Decision::Wait, None));
    };
    if observer.index == 0 {
        return Ok((Decision::Wait, None));
    }
    let go = run.find(&a_node.base).expect("go node in run");
    if !crate::causality::happens_before(run, go, observer)? {
        return Ok((Decision::Wait, None));
    }
    let own = GeneralNode::basic(run.node(observer).expect("observer in run"));
    let verdict = match task.kind {
        TaskKind::Late => knows_precedence(run, observer, &a_node, &own, task.x),
        TaskKind::Early => knows_precedence(run, observer, &own, &a_node, task.x),
    };
    match verdict {
        Ok(v) => {
            let decision = if v.holds {
                Decision::Act
            } else {
                Decision::Wait
            };
            Ok((decision, Some(v)))
        }
        // A chain still in transit cannot settle the decision yet.
        Err(CoordError::NodeUnresolved) => Ok((Decision::Wait, None)),
        Err(e) => Err(e),
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum TaskVerdict {
    /// B acted and the realized times satisfy the bound.
    Compliant,
    /// B never acted; allowed, since B need act only when it can.
    CompliantNoAction,
    /// B acted but A's action lies past the horizon.
    IncompleteTrace,
    /// B acted and the realized times violate the bound.
    Violated { gap: i64, required: i64 },
}

/// End-to-end outcome of running a task on a trace.
#[derive(Clone, Debug)]
pub struct TaskOutcome {
    pub run: Run,
    pub go: Option<NodeId>,
    pub action_a: Option<(NodeId, u32)>,
    pub action_b: Option<(NodeId, u32)>,
    pub verdict: TaskVerdict,
    pub knowledge: Option<KnowledgeVerdict>,
}

/// Executes the flooding protocol under the schedule and drives B's rule at
/// every state change; the verdict checks realized times after the fact.
pub fn run_task(
    net: std::sync::Arc<Network>,
    task: &CoordinationTask,
    externals: &[ExternalInput],
    schedule: &Schedule,
    horizon: u32,
) -> Result<TaskOutcome, CoordError> {
    let run = execute(net, externals, schedule, horizon)?;
    evaluate_task(run, task)
}

/// Drives B's rule over an existing run.
pub fn evaluate_task(run: Run, task: &CoordinationTask) -> Result<TaskOutcome, CoordError> {
    let go = go_node(&run, task.trigger);
    let a_chain = action_node(&run, task)?;
    let action_a = a_chain
        .as_ref()
        .and_then(|n| resolve_id(&run, n))
        .map(|id| (id, run.time(id).expect("resolved node has a time")));

    let mut action_b = None;
    let mut knowledge = None;
    for k in 1..run.timeline(task.actor_b).len() as u32 {
        let node = NodeId::new(task.actor_b, k);
        let (decision, verdict) = protocol_decision(&run, task, node)?;
        if decision == Decision::Act {
            action_b = Some((node, run.time(node).expect("node in run")));
            knowledge = verdict;
            break;
        }
    }

    let verdict = match (action_b, action_a) {
        (None, _) => TaskVerdict::CompliantNoAction,
        (Some(_), None) => TaskVerdict::IncompleteTrace,
        (Some((_, tb)), Some((_, ta))) => {
            let (gap, required) = match task.kind {
                TaskKind::Late => (tb as i64 - ta as i64, task.x),
                TaskKind::Early => (ta as i64 - tb as i64, task.x),
            };
            if gap >= required {
                TaskVerdict::Compliant
            } else {
                TaskVerdict::Violated { gap, required }
            }
        }
    };
    Ok(TaskOutcome {
        run,
        go,
        action_a,
        action_b,
        verdict,
        knowledge,
    })
}

/// B's earliest node at which the rule says act, if any.
pub fn first_act_node(run: &Run, task: &CoordinationTask) -> Result<Option<NodeId>, CoordError> {
    for k in 1..run.timeline(task.actor_b).len() as u32 {
        let node = NodeId::new(task.actor_b, k);
        if protocol_decision(run, task, node)?.0 == Decision::Act {
            return Ok(Some(node));
        }
    }
    Ok(None)
}

/// Recognized general nodes of bounded chain length, in deterministic
/// order; the query surface for knowledge checks.
pub fn recognized_nodes(
    run: &Run,
    observer: NodeId,
    max_hops: usize,
) -> Result<Vec<GeneralNode>, CoordError> {
    let visible = past(run, observer)?;
    let mut out = Vec::new();
    for id in visible {
        let base = run.node(id).expect("past node in run");
        let mut frontier = vec![ProcPath::singleton(id.proc)];
        for _ in 0..=max_hops {
            let mut next = Vec::new();
            for path in frontier {
                out.push(GeneralNode::new(base.clone(), path.clone()).expect("anchored path"));
                for &dst in run.net().out_channels(path.last()) {
                    next.push(path.extend(dst));
                }
            }
            frontier = next;
        }
    }
    Ok(out)
}

/// True when the node resolves in the run at a positive time — the
/// precondition surface of `knows_precedence`.
pub fn queryable(run: &Run, node: &GeneralNode) -> bool {
    match resolve_id(run, node) {
        Some(id) => run.time(id).is_some_and(|t| t > 0),
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::corpus;
    use crate::oracle::{oracle_knows, EnumerationBudget, ThreeValued};
    use crate::sim::{execute, Schedule};

    fn nid(run: &Run, name: &str, k: u32) -> NodeId {
        NodeId::new(run.net().proc_id(name).unwrap(), k)
    }

    fn gnode(run: &Run, name: &str, k: u32, path: &[&str]) -> GeneralNode {
        let base = run.node(nid(run, name, k)).unwrap();
        let hops = path.iter().map(|p| run.net().proc_id(p).unwrap()).collect();
        GeneralNode::new(base, ProcPath::new(hops).unwrap()).unwrap()
    }

    fn fork_task(net: &Network, kind: TaskKind, x: i64) -> CoordinationTask {
        CoordinationTask {
            kind,
            actor_a: net.proc_id("A").unwrap(),
            actor_b: net.proc_id("B").unwrap(),
            trigger: net.proc_id("C").unwrap(),
            x,
        }
    }

    #[test]
    fn self_precedence_holds_at_zero() {
        let net = corpus::fork_net();
        let run = execute(
            net.clone(),
            &corpus::go_externals(&net),
            &Schedule::Latest,
            10,
        )
        .unwrap();
        let observer = nid(&run, "B", 1);
        let own = gnode(&run, "B", 1, &["B"]);
        let v = knows_precedence(&run, observer, &own, &own, 0).unwrap();
        assert!(v.holds);
        assert_eq!(v.max_weight, Some(0));
        let cert = v.certificate.unwrap();
        assert_eq!(cert.weight, 0);
        assert!(validate_zigzag(&run, &cert, &own, &own));
    }

    #[test]
    fn shared_chain_endpoints_are_known_equal() {
        // Both endpoints name the same chain: the observer knows the times
        // coincide even though the chain leaves its past.
        let net = corpus::fork_net();
        let run = execute(
            net.clone(),
            &corpus::go_externals(&net),
            &Schedule::Latest,
            12,
        )
        .unwrap();
        let observer = nid(&run, "B", 1);
        let chain = gnode(&run, "C", 1, &["C", "A"]);
        let v = knows_precedence(&run, observer, &chain, &chain, 0).unwrap();
        assert!(v.holds);
        assert_eq!(v.max_weight, Some(0));
        let cert = v.certificate.unwrap();
        assert!(validate_zigzag(&run, &cert, &chain, &chain));
        assert!(is_visible(&run, observer, &cert).unwrap());

        // A shorter prefix of the chain precedes it by its lower bound and
        // follows it by its upper bound.
        let prefix = gnode(&run, "C", 1, &["C"]);
        let ahead = knows_precedence(&run, observer, &prefix, &chain, 0).unwrap();
        assert_eq!(ahead.max_weight, Some(1));
        let behind = knows_precedence(&run, observer, &chain, &prefix, 0).unwrap();
        assert_eq!(behind.max_weight, Some(-3));
    }

    #[test]
    fn fork_guarantee_is_known_at_receipt() {
        let net = corpus::fork_net();
        let run = execute(
            net.clone(),
            &corpus::go_externals(&net),
            &Schedule::Latest,
            12,
        )
        .unwrap();
        let observer = nid(&run, "B", 1);
        let a_node = gnode(&run, "C", 1, &["C", "A"]);
        let own = gnode(&run, "B", 1, &["B"]);
        let v = knows_precedence(&run, observer, &a_node, &own, 2).unwrap();
        assert!(v.holds);
        assert_eq!(v.max_weight, Some(2));
        let cert = v.certificate.unwrap();
        assert!(is_visible(&run, observer, &cert).unwrap());
        assert!(validate_zigzag(&run, &cert, &a_node, &own));

        let too_much = knows_precedence(&run, observer, &a_node, &own, 3).unwrap();
        assert!(!too_much.holds);
        assert_eq!(too_much.max_weight, Some(2));
    }

    #[test]
    fn knowledge_agrees_with_oracle_on_fork_net() {
        let net = corpus::fork_net();
        let run = execute(
            net.clone(),
            &corpus::go_externals(&net),
            &Schedule::Latest,
            12,
        )
        .unwrap();
        let observer = nid(&run, "B", 1);
        let a_node = gnode(&run, "C", 1, &["C", "A"]);
        let own = gnode(&run, "B", 1, &["B"]);
        let budget = EnumerationBudget {
            horizon: 12,
            max_runs: 100_000,
            external_slack: 0,
        };
        for x in -8..=4 {
            let v = knows_precedence(&run, observer, &a_node, &own, x).unwrap();
            let o = oracle_knows(&run, observer, &a_node, &own, x, &budget).unwrap();
            let expected = if v.holds {
                ThreeValued::True
            } else {
                ThreeValued::False
            };
            assert_eq!(o.verdict, expected, "x = {x}");
        }
    }

    #[test]
    fn late_task_acts_on_fork_net() {
        let net = corpus::fork_net();
        let task = fork_task(&net, TaskKind::Late, 2);
        let out = run_task(
            net.clone(),
            &task,
            &corpus::go_externals(&net),
            &Schedule::Latest,
            12,
        )
        .unwrap();
        assert_eq!(out.verdict, TaskVerdict::Compliant);
        let (b_node, tb) = out.action_b.expect("B acts");
        assert_eq!(b_node, nid(&out.run, "B", 1));
        let (_, ta) = out.action_a.unwrap();
        assert!(tb as i64 - ta as i64 >= 2);
        let cert = out.knowledge.unwrap().certificate.unwrap();
        assert!(is_visible(&out.run, b_node, &cert).unwrap());
    }

    #[test]
    fn floor_bound_is_known_through_aux_route() {
        // D's message to X is outside B's view, but X reports to B on a
        // (1,1) channel: had X received it before B's current node, the
        // report would already be here. So B knows X's receipt cannot
        // precede its own node: the maximal provable lead is 0, witnessed
        // by a fork whose tail relays X's receipt back to B's line.
        let net = Arc::new(
            Network::new(
                &["B", "D", "X", "Y"],
                &[
                    ("D", "X", 1, 9),
                    ("D", "Y", 1, 1),
                    ("Y", "B", 1, 1),
                    ("X", "B", 1, 1),
                ],
            )
            .unwrap(),
        );
        let externals = vec![crate::sim::ExternalInput {
            id: "goD".into(),
            target: net.proc_id("D").unwrap(),
            time: 1,
        }];
        let run = execute(net, &externals, &Schedule::Latest, 12).unwrap();
        let observer = nid(&run, "B", 1);
        let own = gnode(&run, "B", 1, &["B"]);
        let chain = gnode(&run, "D", 1, &["D", "X"]);
        let v = knows_precedence(&run, observer, &own, &chain, 0).unwrap();
        assert!(v.holds);
        assert_eq!(v.max_weight, Some(0));
        let cert = v.certificate.unwrap();
        assert!(validate_zigzag(&run, &cert, &own, &chain));
        assert!(is_visible(&run, observer, &cert).unwrap());
        // The witnessing fork relays the unseen receipt back to B's line.
        let top = cert.forks.last().unwrap();
        assert_eq!(top.base, chain);
        assert_eq!(top.tail_path.hops().len(), 2);
        assert_eq!(cert.separation_count(), 1);
    }

    #[test]
    fn unseen_message_bounds_its_sender_backwards() {
        // C's message to A is still in transit at A's boundary node, so it
        // must land later; its nine-step upper bound then caps how early C
        // acted: time(C@1) >= time(A@1) - 8. The direct report route through
        // D is far weaker (-16), so the verdict must use the unseen-message
        // constraint.
        let net = Arc::new(
            Network::new(
                &["A", "B", "C", "D"],
                &[
                    ("A", "B", 1, 1),
                    ("C", "A", 2, 9),
                    ("C", "D", 1, 9),
                    ("D", "B", 1, 9),
                ],
            )
            .unwrap(),
        );
        let externals = vec![
            crate::sim::ExternalInput {
                id: "goC".into(),
                target: net.proc_id("C").unwrap(),
                time: 1,
            },
            crate::sim::ExternalInput {
                id: "goA".into(),
                target: net.proc_id("A").unwrap(),
                time: 1,
            },
        ];
        let mut map = std::collections::BTreeMap::new();
        let c = net.proc_id("C").unwrap();
        let d = net.proc_id("D").unwrap();
        let b = net.proc_id("B").unwrap();
        map.insert((c, 1, d), 2u32); // C's report reaches D quickly,
        map.insert((d, 1, b), 3u32); // and D relays it to B,
        let run = execute(net, &externals, &Schedule::Explicit(map), 12).unwrap();
        // while C's message to A lands only at t = 10, outside B@2's view.
        // That receipt would itself be relayed to B within one step, and
        // the relay is also unseen, so the receipt postdates B@2: together
        // with the nine-step upper bound, time(C@1) >= time(A@1) - 7.
        let observer = nid(&run, "B", 2);
        let a_node = gnode(&run, "A", 1, &["A"]);
        let c_node = gnode(&run, "C", 1, &["C"]);
        let v = knows_precedence(&run, observer, &a_node, &c_node, -7).unwrap();
        assert!(v.holds);
        assert_eq!(v.max_weight, Some(-7));
        let cert = v.certificate.unwrap();
        assert!(validate_zigzag(&run, &cert, &a_node, &c_node));
        assert!(is_visible(&run, observer, &cert).unwrap());
        // Two strict steps: B's own successor edge and the unseen relay.
        assert_eq!(cert.separation_count(), 2);
        // The oracle agrees at the boundary.
        let budget = crate::oracle::EnumerationBudget {
            horizon: 20,
            max_runs: 200_000,
            external_slack: 8,
        };
        let yes =
            crate::oracle::oracle_knows(&run, observer, &a_node, &c_node, -7, &budget).unwrap();
        assert_eq!(yes.verdict, crate::oracle::ThreeValued::True);
        let no =
            crate::oracle::oracle_knows(&run, observer, &a_node, &c_node, -6, &budget).unwrap();
        assert_eq!(no.verdict, crate::oracle::ThreeValued::False);
    }

    #[test]
    fn no_go_means_no_action() {
        let net = corpus::fork_net();
        let task = fork_task(&net, TaskKind::Late, 2);
        let out = run_task(net, &task, &[], &Schedule::Latest, 12).unwrap();
        assert_eq!(out.verdict, TaskVerdict::CompliantNoAction);
        assert!(out.action_b.is_none());
    }

    #[test]
    fn invisible_pattern_blocks_action() {
        // No report channel D -> B: B never learns the pattern.
        let net = corpus::zigzag_net();
        let run = corpus::separated_zigzag_run(net.clone(), 14);
        let task = CoordinationTask {
            kind: TaskKind::Late,
            actor_a: net.proc_id("A").unwrap(),
            actor_b: net.proc_id("B").unwrap(),
            trigger: net.proc_id("C").unwrap(),
            x: 6,
        };
        let out = evaluate_task(run, &task).unwrap();
        assert_eq!(out.verdict, TaskVerdict::CompliantNoAction);
    }

    #[test]
    fn visible_pattern_enables_action() {
        let net = corpus::visible_zigzag_net();
        let run = corpus::separated_zigzag_run(net.clone(), 14);
        let task = CoordinationTask {
            kind: TaskKind::Late,
            actor_a: net.proc_id("A").unwrap(),
            actor_b: net.proc_id("B").unwrap(),
            trigger: net.proc_id("C").unwrap(),
            x: 4,
        };
        let out = evaluate_task(run, &task).unwrap();
        assert_eq!(out.verdict, TaskVerdict::Compliant);
        let verdict = out.knowledge.unwrap();
        assert!(verdict.max_weight.unwrap() >= 4);
        let cert = verdict.certificate.unwrap();
        assert!(is_visible(&out.run, out.action_b.unwrap().0, &cert).unwrap());
    }
}
