//! Canonical local states and node identity.
//!
//! A local state is the initial state of a process followed by the sequence
//! of event batches it has received; under the flooding full-information
//! protocol every internal message carries the sender's entire state, so
//! states form trees. Two states are equal iff their event trees are
//! isomorphic with identical external-input ids. Equality deliberately
//! ignores wall-clock times: a process cannot observe them.

use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::network::ProcId;

/// One received event: an external input or a full-information message.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Event {
    External {
        id: String,
    },
    /// Message carrying the sender's local state at send time.
    Message {
        sender: LocalState,
    },
}

impl Event {
    /// Canonical sort key: externals first by id, then messages by
    /// (sender process, sender state index).
    fn sort_key(&self) -> (u8, &str, ProcId, u32) {
        match self {
            Event::External { id } => (0, id.as_str(), ProcId(0), 0),
            Event::Message { sender } => (1, "", sender.proc(), sender.index()),
        }
    }
}

struct StateRepr {
    proc: ProcId,
    prev: Option<LocalState>,
    batch: Vec<Event>,
    index: u32,
    hash: u64,
}

/// A canonical local state. Cheap to clone; history is shared.
#[derive(Clone)]
pub struct LocalState(Arc<StateRepr>);

impl LocalState {
    pub fn initial(proc: ProcId) -> Self {
        let mut h = DefaultHasher::new();
        ("initial", proc).hash(&mut h);
        LocalState(Arc::new(StateRepr {
            proc,
            prev: None,
            batch: Vec::new(),
            index: 0,
            hash: h.finish(),
        }))
    }

    /// The state reached by receiving `batch` (at least one event) in this
    /// state. The batch is put in canonical order.
    pub fn receive(&self, mut batch: Vec<Event>) -> Self {
        assert!(
            !batch.is_empty(),
            "state changes require at least one event"
        );
        batch.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        let mut h = DefaultHasher::new();
        self.0.hash.hash(&mut h);
        for event in &batch {
            match event {
                Event::External { id } => (0u8, id).hash(&mut h),
                Event::Message { sender } => (1u8, sender.0.hash).hash(&mut h),
            }
        }
        LocalState(Arc::new(StateRepr {
            proc: self.0.proc,
            prev: Some(self.clone()),
            batch,
            index: self.0.index + 1,
            hash: h.finish(),
        }))
    }

    pub fn proc(&self) -> ProcId {
        self.0.proc
    }

    /// Ordinal on the process line: 0 for the initial state.
    pub fn index(&self) -> u32 {
        self.0.index
    }

    pub fn is_initial(&self) -> bool {
        self.0.index == 0
    }

    pub fn prev(&self) -> Option<&LocalState> {
        self.0.prev.as_ref()
    }

    /// Events received at the transition into this state; empty only for
    /// initial states.
    pub fn batch(&self) -> &[Event] {
        &self.0.batch
    }
}

impl PartialEq for LocalState {
    fn eq(&self, other: &Self) -> bool {
        if Arc::ptr_eq(&self.0, &other.0) {
            return true;
        }
        if self.0.hash != other.0.hash
            || self.0.proc != other.0.proc
            || self.0.index != other.0.index
        {
            return false;
        }
        self.0.batch == other.0.batch && self.0.prev == other.0.prev
    }
}

impl Eq for LocalState {}

impl Hash for LocalState {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash.hash(state);
    }
}

impl fmt::Debug for LocalState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "state(p{}@{})", self.0.proc.0, self.0.index)
    }
}

/// A point on a process timeline: the process together with a canonical
/// local state. Identity is stable across runs.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct BasicNode {
    state: LocalState,
}

impl BasicNode {
    pub fn new(state: LocalState) -> Self {
        BasicNode { state }
    }

    pub fn proc(&self) -> ProcId {
        self.state.proc()
    }

    pub fn index(&self) -> u32 {
        self.state.index()
    }

    pub fn state(&self) -> &LocalState {
        &self.state
    }

    pub fn is_initial(&self) -> bool {
        self.state.is_initial()
    }

    pub fn id(&self) -> NodeId {
        NodeId {
            proc: self.proc(),
            index: self.index(),
        }
    }
}

/// Run-relative handle for a basic node: the `index`-th state of `proc`
/// (0 = initial). Rendered as `P@k`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct NodeId {
    pub proc: ProcId,
    pub index: u32,
}

impl NodeId {
    pub fn new(proc: ProcId, index: u32) -> Self {
        NodeId { proc, index }
    }
}
