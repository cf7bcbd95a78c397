//! Deterministic execution of the environment scheduler and the flooding
//! full-information protocol (FFIP), plus validation and synthesis of
//! finite runs.
//!
//! A run is a finite prefix up to `horizon`. Every message whose forced
//! delivery time (send + upper) fits the horizon must be delivered; a
//! message whose obligation falls past the horizon may stay in transit, in
//! which case the run is marked `truncated`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::network::{Network, ProcId};
use crate::state::{BasicNode, Event, LocalState, NodeId};

/// Spontaneous input delivered by the environment to one process.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ExternalInput {
    pub id: String,
    pub target: ProcId,
    pub time: u32,
}

/// One FFIP message: sent on channel `src -> dst` when `src` entered its
/// `src_index`-th state at `send_time`, carrying that entire state.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct MessageInstance {
    pub src: ProcId,
    pub src_index: u32,
    pub dst: ProcId,
    pub send_time: u32,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Delivery {
    pub msg: MessageInstance,
    pub deliver_time: u32,
}

/// Environment delivery policy. `Explicit` entries are keyed by
/// `(src, src_index, dst)`; messages without an entry are delivered at
/// their upper bound (the forced delivery time).
#[derive(Clone, Debug)]
pub enum Schedule {
    Earliest,
    Latest,
    Explicit(BTreeMap<(ProcId, u32, ProcId), u32>),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("explicit delivery for {src:?}@{src_index} -> {dst:?} at {time} outside window [{lo}, {hi}]")]
    ScheduleOutOfBounds {
        src: ProcId,
        src_index: u32,
        dst: ProcId,
        time: u32,
        lo: u32,
        hi: u32,
    },
    #[error("external input {id:?} at time {time} does not fit horizon {horizon}")]
    HorizonTooSmall { id: String, time: u32, horizon: u32 },
    #[error("external input time must be >= 1, got {0}")]
    ExternalAtTimeZero(u32),
    #[error("external input id {0:?} used more than once")]
    DuplicateExternal(String),
    #[error("external target {0:?} is not a declared process")]
    UnknownTarget(String),
    #[error(
        "delivery references a message never sent: {src:?}@{src_index} -> {dst:?} at {send_time}"
    )]
    InconsistentSpec {
        src: ProcId,
        src_index: u32,
        dst: ProcId,
        send_time: u32,
    },
    #[error("message {src:?}@{src_index} -> {dst:?} delivered more than once")]
    DuplicateDelivery {
        src: ProcId,
        src_index: u32,
        dst: ProcId,
    },
}

/// A violation found by [`validate`]. Violations are data, not errors: a
/// run can be inspected even when it is not a legal prefix.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Violation {
    /// Delivery outside its channel window, or on a missing channel.
    BoundViolation {
        msg: MessageInstance,
        deliver_time: u32,
    },
    /// Delivery of a message that was never sent.
    UnsentMessage { msg: MessageInstance },
    /// A message had to be delivered within the horizon and was not.
    MustDeliver {
        msg: MessageInstance,
        forced_at: u32,
    },
    /// A state change with no incoming event.
    SpontaneousAction { node: NodeId, time: u32 },
    /// Timeline state content disagrees with the recorded events.
    StateMismatch { node: NodeId },
    /// External input at time zero, past the horizon, or with a reused id.
    BadExternal { id: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::BoundViolation { msg, deliver_time } => write!(
                f,
                "delivery at {deliver_time} outside bounds for {}@{} -> {} sent at {}",
                msg.src.0, msg.src_index, msg.dst.0, msg.send_time
            ),
            Violation::UnsentMessage { msg } => write!(
                f,
                "unsent message {}@{} -> {} at {}",
                msg.src.0, msg.src_index, msg.dst.0, msg.send_time
            ),
            Violation::MustDeliver { msg, forced_at } => write!(
                f,
                "message {}@{} -> {} undelivered though forced at {forced_at}",
                msg.src.0, msg.src_index, msg.dst.0
            ),
            Violation::SpontaneousAction { node, time } => {
                write!(
                    f,
                    "state change p{}@{} at {time} with no incoming event",
                    node.proc.0, node.index
                )
            }
            Violation::StateMismatch { node } => {
                write!(
                    f,
                    "state content mismatch at p{}@{}",
                    node.proc.0, node.index
                )
            }
            Violation::BadExternal { id } => write!(f, "bad external input {id:?}"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TimelinePoint {
    pub time: u32,
    pub state: LocalState,
}

struct RunInner {
    net: Arc<Network>,
    horizon: u32,
    externals: Vec<ExternalInput>,
    deliveries: Vec<Delivery>,
    timelines: Vec<Vec<TimelinePoint>>,
    truncated: bool,
}

/// A finite timed trace: external inputs, message deliveries, and the
/// derived per-process state sequences. Cheap to clone.
#[derive(Clone)]
pub struct Run {
    inner: Arc<RunInner>,
}

impl Run {
    pub fn net(&self) -> &Arc<Network> {
        &self.inner.net
    }

    pub fn horizon(&self) -> u32 {
        self.inner.horizon
    }

    pub fn externals(&self) -> &[ExternalInput] {
        &self.inner.externals
    }

    pub fn deliveries(&self) -> &[Delivery] {
        &self.inner.deliveries
    }

    /// True when some sent message's forced delivery falls past the horizon.
    pub fn truncated(&self) -> bool {
        self.inner.truncated
    }

    pub fn timeline(&self, proc: ProcId) -> &[TimelinePoint] {
        &self.inner.timelines[proc.index()]
    }

    pub fn node(&self, id: NodeId) -> Option<BasicNode> {
        self.inner.timelines[id.proc.index()]
            .get(id.index as usize)
            .map(|p| BasicNode::new(p.state.clone()))
    }

    pub fn time(&self, id: NodeId) -> Option<u32> {
        self.inner.timelines[id.proc.index()]
            .get(id.index as usize)
            .map(|p| p.time)
    }

    /// All nodes of the run in `(proc, index)` order.
    pub fn node_ids(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        for (p, line) in self.inner.timelines.iter().enumerate() {
            for k in 0..line.len() {
                out.push(NodeId::new(ProcId(p as u32), k as u32));
            }
        }
        out
    }

    /// Looks a canonical node up in this run's timelines.
    pub fn find(&self, node: &BasicNode) -> Option<NodeId> {
        let line = &self.inner.timelines[node.proc().index()];
        let k = node.index() as usize;
        match line.get(k) {
            Some(point) if &point.state == node.state() => Some(node.id()),
            _ => None,
        }
    }

    /// The delivery of the message sent at `src_node` on channel to `dst`,
    /// if it happened within the horizon.
    pub fn delivery_of(&self, src_node: NodeId, dst: ProcId) -> Option<Delivery> {
        self.inner
            .deliveries
            .iter()
            .find(|d| {
                d.msg.src == src_node.proc && d.msg.src_index == src_node.index && d.msg.dst == dst
            })
            .copied()
    }

    /// The node that a delivery produced: the state the destination entered
    /// at the delivery time.
    pub fn node_at_time(&self, proc: ProcId, time: u32) -> Option<NodeId> {
        let line = &self.inner.timelines[proc.index()];
        line.iter()
            .position(|p| p.time == time)
            .map(|k| NodeId::new(proc, k as u32))
    }

    /// Every message sent in the run (FFIP: one per outgoing channel per
    /// state change), in `(send_time, src, src_index, dst)` order.
    pub fn sent_messages(&self) -> Vec<MessageInstance> {
        let mut out = Vec::new();
        for (p, line) in self.inner.timelines.iter().enumerate() {
            let src = ProcId(p as u32);
            for (k, point) in line.iter().enumerate().skip(1) {
                for &dst in self.inner.net.out_channels(src) {
                    out.push(MessageInstance {
                        src,
                        src_index: k as u32,
                        dst,
                        send_time: point.time,
                    });
                }
            }
        }
        out.sort_by_key(|m| (m.send_time, m.src, m.src_index, m.dst));
        out
    }

    pub fn node_name(&self, id: NodeId) -> String {
        format!("{}@{}", self.inner.net.proc_name(id.proc), id.index)
    }
}

impl fmt::Debug for Run {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Run")
            .field("horizon", &self.inner.horizon)
            .field("externals", &self.inner.externals.len())
            .field("deliveries", &self.inner.deliveries.len())
            .field("truncated", &self.inner.truncated)
            .finish()
    }
}

fn check_externals(
    net: &Network,
    externals: &[ExternalInput],
    horizon: u32,
) -> Result<(), SimError> {
    let mut seen = std::collections::BTreeSet::new();
    for ext in externals {
        if ext.time == 0 {
            return Err(SimError::ExternalAtTimeZero(ext.time));
        }
        if ext.time > horizon {
            return Err(SimError::HorizonTooSmall {
                id: ext.id.clone(),
                time: ext.time,
                horizon,
            });
        }
        if ext.target.index() >= net.proc_count() {
            return Err(SimError::UnknownTarget(format!("{:?}", ext.target)));
        }
        if !seen.insert(ext.id.clone()) {
            return Err(SimError::DuplicateExternal(ext.id.clone()));
        }
    }
    Ok(())
}

/// Runs the FFIP under the given delivery policy. Deterministic: the output
/// is a pure function of the arguments.
pub fn execute(
    net: Arc<Network>,
    externals: &[ExternalInput],
    schedule: &Schedule,
    horizon: u32,
) -> Result<Run, SimError> {
    check_externals(&net, externals, horizon)?;

    struct Pending {
        msg: MessageInstance,
        deliver_at: u32,
    }

    let mut states: Vec<LocalState> = net.procs().map(LocalState::initial).collect();
    let mut timelines: Vec<Vec<TimelinePoint>> = states
        .iter()
        .map(|s| {
            vec![TimelinePoint {
                time: 0,
                state: s.clone(),
            }]
        })
        .collect();
    let mut pending: Vec<Pending> = Vec::new();
    let mut deliveries: Vec<Delivery> = Vec::new();

    let chosen_time = |msg: &MessageInstance| -> Result<u32, SimError> {
        let bounds = net.bounds(msg.src, msg.dst).expect("channel exists");
        let lo = msg.send_time + bounds.lower;
        let hi = msg.send_time + bounds.upper;
        let t = match schedule {
            Schedule::Earliest => lo,
            Schedule::Latest => hi,
            Schedule::Explicit(map) => map
                .get(&(msg.src, msg.src_index, msg.dst))
                .copied()
                .unwrap_or(hi),
        };
        if t < lo || t > hi {
            return Err(SimError::ScheduleOutOfBounds {
                src: msg.src,
                src_index: msg.src_index,
                dst: msg.dst,
                time: t,
                lo,
                hi,
            });
        }
        Ok(t)
    };

    for t in 1..=horizon {
        // Gather this step's events per process: externals, then messages.
        let mut batches: BTreeMap<ProcId, Vec<(Event, Option<MessageInstance>)>> = BTreeMap::new();
        for ext in externals.iter().filter(|e| e.time == t) {
            batches
                .entry(ext.target)
                .or_default()
                .push((Event::External { id: ext.id.clone() }, None));
        }
        let mut rest = Vec::new();
        for p in pending {
            if p.deliver_at == t {
                let sender = timelines[p.msg.src.index()][p.msg.src_index as usize]
                    .state
                    .clone();
                batches
                    .entry(p.msg.dst)
                    .or_default()
                    .push((Event::Message { sender }, Some(p.msg)));
            } else {
                rest.push(p);
            }
        }
        pending = rest;

        for (proc, events) in batches {
            for (_, msg) in events.iter() {
                if let Some(msg) = msg {
                    deliveries.push(Delivery {
                        msg: *msg,
                        deliver_time: t,
                    });
                }
            }
            let batch: Vec<Event> = events.into_iter().map(|(e, _)| e).collect();
            let next = states[proc.index()].receive(batch);
            states[proc.index()] = next.clone();
            timelines[proc.index()].push(TimelinePoint {
                time: t,
                state: next.clone(),
            });
            // FFIP: one message per outgoing channel, carrying the new state.
            for &dst in net.out_channels(proc) {
                let msg = MessageInstance {
                    src: proc,
                    src_index: next.index(),
                    dst,
                    send_time: t,
                };
                let deliver_at = chosen_time(&msg)?;
                if deliver_at <= horizon {
                    pending.push(Pending { msg, deliver_at });
                }
                // Deliveries past the horizon stay in transit; the
                // truncation scan below accounts for them.
            }
        }
    }

    deliveries.sort_by_key(|d| (d.deliver_time, d.msg.src, d.msg.src_index, d.msg.dst));
    let run = Run {
        inner: Arc::new(RunInner {
            net,
            horizon,
            externals: sorted_externals(externals),
            deliveries,
            timelines,
            truncated: false,
        }),
    };
    Ok(mark_truncation(run))
}

fn sorted_externals(externals: &[ExternalInput]) -> Vec<ExternalInput> {
    let mut out = externals.to_vec();
    out.sort_by(|a, b| (a.time, &a.id).cmp(&(b.time, &b.id)));
    out
}

fn mark_truncation(run: Run) -> Run {
    let truncated = run.sent_messages().iter().any(|m| {
        let upper = run.net().bounds(m.src, m.dst).map(|b| b.upper).unwrap_or(0);
        run.delivery_of(NodeId::new(m.src, m.src_index), m.dst)
            .is_none()
            && m.send_time + upper > run.horizon()
    });
    let mut inner = run.inner;
    Arc::get_mut(&mut inner)
        .expect("freshly built run is unshared")
        .truncated = truncated;
    Run { inner }
}

/// Builds a run from explicit external inputs and message deliveries and
/// derives the state timelines. Fails only on causally impossible specs
/// (delivery of a never-sent message); bound violations pass through for
/// [`validate`] to report.
pub fn synthesize_run(
    net: Arc<Network>,
    horizon: u32,
    externals: &[ExternalInput],
    deliveries: &[Delivery],
) -> Result<Run, SimError> {
    check_externals(&net, externals, horizon)?;

    let mut states: Vec<LocalState> = net.procs().map(LocalState::initial).collect();
    let mut timelines: Vec<Vec<TimelinePoint>> = states
        .iter()
        .map(|s| {
            vec![TimelinePoint {
                time: 0,
                state: s.clone(),
            }]
        })
        .collect();

    let mut seen = std::collections::BTreeSet::new();
    for d in deliveries {
        if !seen.insert((d.msg.src, d.msg.src_index, d.msg.dst)) {
            return Err(SimError::DuplicateDelivery {
                src: d.msg.src,
                src_index: d.msg.src_index,
                dst: d.msg.dst,
            });
        }
    }

    let mut sorted: Vec<Delivery> = deliveries.to_vec();
    sorted.sort_by_key(|d| (d.deliver_time, d.msg.src, d.msg.src_index, d.msg.dst));

    let inconsistent = |msg: &MessageInstance| SimError::InconsistentSpec {
        src: msg.src,
        src_index: msg.src_index,
        dst: msg.dst,
        send_time: msg.send_time,
    };

    let mut di = 0;
    for t in 1..=horizon {
        let mut batches: BTreeMap<ProcId, Vec<Event>> = BTreeMap::new();
        for ext in externals.iter().filter(|e| e.time == t) {
            batches
                .entry(ext.target)
                .or_default()
                .push(Event::External { id: ext.id.clone() });
        }
        while di < sorted.len() && sorted[di].deliver_time == t {
            let d = &sorted[di];
            di += 1;
            let line = &timelines[d.msg.src.index()];
            let point = line
                .get(d.msg.src_index as usize)
                .ok_or_else(|| inconsistent(&d.msg))?;
            if point.time != d.msg.send_time || d.msg.src_index == 0 {
                return Err(inconsistent(&d.msg));
            }
            if net.bounds(d.msg.src, d.msg.dst).is_none() {
                return Err(inconsistent(&d.msg));
            }
            batches.entry(d.msg.dst).or_default().push(Event::Message {
                sender: point.state.clone(),
            });
        }
        for (proc, batch) in batches {
            let next = states[proc.index()].receive(batch);
            states[proc.index()] = next.clone();
            timelines[proc.index()].push(TimelinePoint {
                time: t,
                state: next,
            });
        }
    }
    if di < sorted.len() {
        // A delivery past the horizon.
        return Err(inconsistent(&sorted[di].msg));
    }

    let run = Run {
        inner: Arc::new(RunInner {
            net,
            horizon,
            externals: sorted_externals(externals),
            deliveries: sorted,
            timelines,
            truncated: false,
        }),
    };
    Ok(mark_truncation(run))
}

/// Rebuilds a run with hand-written timelines; for tests that need runs a
/// constructor would refuse to produce.
pub fn run_from_parts(
    net: Arc<Network>,
    horizon: u32,
    externals: Vec<ExternalInput>,
    deliveries: Vec<Delivery>,
    timelines: Vec<Vec<TimelinePoint>>,
    truncated: bool,
) -> Run {
    Run {
        inner: Arc::new(RunInner {
            net,
            horizon,
            externals,
            deliveries,
            timelines,
            truncated,
        }),
    }
}

/// Checks every run invariant; an empty result means the run is a legal
/// finite prefix.
pub fn validate(run: &Run) -> Vec<Violation> {
    let net = run.net().clone();
    let mut violations = Vec::new();

    // Externals: positive times within horizon, unique ids.
    let mut ids = std::collections::BTreeSet::new();
    for ext in run.externals() {
        if ext.time == 0 || ext.time > run.horizon() || !ids.insert(&ext.id) {
            violations.push(Violation::BadExternal { id: ext.id.clone() });
        }
    }

    // Deliveries: message exists, channel exists, window respected.
    let sent: std::collections::BTreeSet<(ProcId, u32, ProcId, u32)> = run
        .sent_messages()
        .into_iter()
        .map(|m| (m.src, m.src_index, m.dst, m.send_time))
        .collect();
    for d in run.deliveries() {
        let m = d.msg;
        if !sent.contains(&(m.src, m.src_index, m.dst, m.send_time)) {
            violations.push(Violation::UnsentMessage { msg: m });
            continue;
        }
        match net.bounds(m.src, m.dst) {
            Some(b) => {
                if d.deliver_time < m.send_time + b.lower || d.deliver_time > m.send_time + b.upper
                {
                    violations.push(Violation::BoundViolation {
                        msg: m,
                        deliver_time: d.deliver_time,
                    });
                }
            }
            None => violations.push(Violation::BoundViolation {
                msg: m,
                deliver_time: d.deliver_time,
            }),
        }
    }

    // Must-deliver within the horizon.
    for m in run.sent_messages() {
        if let Some(b) = net.bounds(m.src, m.dst) {
            let forced = m.send_time + b.upper;
            if forced <= run.horizon()
                && run
                    .delivery_of(NodeId::new(m.src, m.src_index), m.dst)
                    .is_none()
            {
                violations.push(Violation::MustDeliver {
                    msg: m,
                    forced_at: forced,
                });
            }
        }
    }

    // Event-driven timelines: every state change matches its event batch.
    for proc in net.procs() {
        let line = run.timeline(proc);
        if line.is_empty() || line[0].time != 0 || !line[0].state.is_initial() {
            violations.push(Violation::StateMismatch {
                node: NodeId::new(proc, 0),
            });
            continue;
        }
        let mut prev = line[0].state.clone();
        for (k, point) in line.iter().enumerate().skip(1) {
            let id = NodeId::new(proc, k as u32);
            let mut batch: Vec<Event> = run
                .externals()
                .iter()
                .filter(|e| e.target == proc && e.time == point.time)
                .map(|e| Event::External { id: e.id.clone() })
                .collect();
            for d in run
                .deliveries()
                .iter()
                .filter(|d| d.msg.dst == proc && d.deliver_time == point.time)
            {
                if let Some(sender) = run
                    .timeline(d.msg.src)
                    .get(d.msg.src_index as usize)
                    .map(|p| p.state.clone())
                {
                    batch.push(Event::Message { sender });
                }
            }
            if point.time <= run.timeline(proc)[k - 1].time || point.time > run.horizon() {
                violations.push(Violation::StateMismatch { node: id });
            }
            if batch.is_empty() {
                violations.push(Violation::SpontaneousAction {
                    node: id,
                    time: point.time,
                });
                prev = point.state.clone();
                continue;
            }
            let expect = prev.receive(batch);
            if expect != point.state {
                violations.push(Violation::StateMismatch { node: id });
            }
            prev = point.state.clone();
        }
    }

    violations
}
