//! Clockless bounded-communication model: processes exchange messages over
//! channels with integer lower/upper delay bounds and have no clocks, yet
//! observed events plus the bounds let them deduce — and know — timed
//! precedence between events.
//!
//! The crate provides:
//! - a deterministic simulator for the flooding full-information protocol
//!   ([`sim`]),
//! - happens-before, pasts and message-chain node resolution ([`causality`]),
//! - basic/local/extended bounds graphs with longest-path queries ([`graph`]),
//! - zigzag certificates proving timed precedence ([`zigzag`]),
//! - valid timing functions and the slow/fast run constructions ([`timing`]),
//! - knowledge-of-precedence decisions and the Early/Late coordination
//!   protocols ([`coordination`]),
//! - a brute-force run enumerator used as ground truth ([`oracle`]).

pub mod causality;
pub mod coordination;
pub mod corpus;
pub mod graph;
pub mod network;
pub mod oracle;
pub mod sim;
pub mod state;
pub mod timing;
pub mod zigzag;

pub use causality::GeneralNode;
pub use coordination::{
    CoordinationTask, Decision, KnowledgeVerdict, TaskKind, TaskOutcome, TaskVerdict,
};
pub use graph::{BoundsGraph, GraphNode, GraphTag, SourcePartition};
pub use network::{ChannelBounds, Network, NetworkError, ProcId, ProcPath};
pub use oracle::{EnumerationBudget, OracleAnswer, ThreeValued};
pub use sim::{Delivery, ExternalInput, MessageInstance, Run, Schedule, SimError, Violation};
pub use state::{BasicNode, Event, LocalState, NodeId};
pub use timing::{FastRun, FastTiming, TimingFunction};
pub use zigzag::{ConstraintPath, Join, TwoLeggedFork, ZigzagCertificate};
