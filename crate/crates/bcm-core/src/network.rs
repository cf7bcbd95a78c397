//! Static description of the communication network: processes, channels
//! with integer delay bounds, and path arithmetic over channel bounds.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a process in its [`Network`]. Ids are assigned in lexicographic
/// name order, so iterating by id is deterministic.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct ProcId(pub u32);

impl ProcId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Per-channel lower/upper bounds on message transmission time.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct ChannelBounds {
    pub lower: u32,
    pub upper: u32,
}

impl ChannelBounds {
    pub fn new(lower: u32, upper: u32) -> Result<Self, NetworkError> {
        if lower < 1 || lower > upper {
            return Err(NetworkError::BadBounds { lower, upper });
        }
        Ok(ChannelBounds { lower, upper })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetworkError {
    #[error("channel bounds must satisfy 1 <= lower <= upper, got ({lower}, {upper})")]
    BadBounds { lower: u32, upper: u32 },
    #[error("duplicate process name {0:?}")]
    DuplicateProcess(String),
    #[error("unknown process {0:?}")]
    UnknownProcess(String),
    #[error("duplicate channel {0} -> {1}")]
    DuplicateChannel(String, String),
    #[error("path is empty")]
    EmptyPath,
    #[error("no channel {0:?} -> {1:?}")]
    InvalidPath(String, String),
    #[error("cannot compose paths: {0:?} != {1:?}")]
    EndpointMismatch(String, String),
}

/// A directed process graph with per-channel delay bounds. Immutable after
/// construction; shared freely across runs and threads.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Network {
    names: Vec<String>,
    channels: BTreeMap<(ProcId, ProcId), ChannelBounds>,
    out: Vec<Vec<ProcId>>,
}

impl Network {
    /// Builds a network from process names and `(src, dst, lower, upper)`
    /// channel descriptions. Names are sorted, so process ids do not depend
    /// on declaration order.
    pub fn new<S: AsRef<str>>(
        procs: &[S],
        chans: &[(S, S, u32, u32)],
    ) -> Result<Self, NetworkError> {
        let mut names: Vec<String> = procs.iter().map(|s| s.as_ref().to_owned()).collect();
        names.sort();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(NetworkError::DuplicateProcess(w[0].clone()));
        }
        let mut net = Network {
            out: vec![Vec::new(); names.len()],
            names,
            channels: BTreeMap::new(),
        };
        for (src, dst, lower, upper) in chans {
            let src_id = net.lookup(src.as_ref())?;
            let dst_id = net.lookup(dst.as_ref())?;
            let bounds = ChannelBounds::new(*lower, *upper)?;
            if net.channels.insert((src_id, dst_id), bounds).is_some() {
                return Err(NetworkError::DuplicateChannel(
                    src.as_ref().to_owned(),
                    dst.as_ref().to_owned(),
                ));
            }
            net.out[src_id.index()].push(dst_id);
        }
        for neighbors in &mut net.out {
            neighbors.sort();
        }
        Ok(net)
    }

    fn lookup(&self, name: &str) -> Result<ProcId, NetworkError> {
        self.proc_id(name)
            .ok_or_else(|| NetworkError::UnknownProcess(name.to_owned()))
    }

    pub fn proc_id(&self, name: &str) -> Option<ProcId> {
        self.names
            .binary_search_by(|n| n.as_str().cmp(name))
            .ok()
            .map(|i| ProcId(i as u32))
    }

    pub fn proc_name(&self, id: ProcId) -> &str {
        &self.names[id.index()]
    }

    pub fn proc_count(&self) -> usize {
        self.names.len()
    }

    pub fn procs(&self) -> impl Iterator<Item = ProcId> + '_ {
        (0..self.names.len() as u32).map(ProcId)
    }

    pub fn bounds(&self, src: ProcId, dst: ProcId) -> Option<ChannelBounds> {
        self.channels.get(&(src, dst)).copied()
    }

    pub fn channels(&self) -> impl Iterator<Item = ((ProcId, ProcId), ChannelBounds)> + '_ {
        self.channels.iter().map(|(k, v)| (*k, *v))
    }

    /// Out-neighbors of `src`, in id order.
    pub fn out_channels(&self, src: ProcId) -> &[ProcId] {
        &self.out[src.index()]
    }

    /// Sum of channel lower bounds along `path`; 0 for a singleton.
    pub fn path_lower(&self, path: &ProcPath) -> Result<u32, NetworkError> {
        self.path_sum(path, |b| b.lower)
    }

    /// Sum of channel upper bounds along `path`; 0 for a singleton.
    pub fn path_upper(&self, path: &ProcPath) -> Result<u32, NetworkError> {
        self.path_sum(path, |b| b.upper)
    }

    fn path_sum(
        &self,
        path: &ProcPath,
        f: impl Fn(ChannelBounds) -> u32,
    ) -> Result<u32, NetworkError> {
        let mut sum = 0;
        for pair in path.hops().windows(2) {
            let bounds = self.bounds(pair[0], pair[1]).ok_or_else(|| {
                NetworkError::InvalidPath(
                    self.proc_name(pair[0]).to_owned(),
                    self.proc_name(pair[1]).to_owned(),
                )
            })?;
            sum += f(bounds);
        }
        Ok(sum)
    }

    /// Checks that every adjacent pair in `path` is a channel.
    pub fn validate_path(&self, path: &ProcPath) -> Result<(), NetworkError> {
        self.path_lower(path).map(|_| ())
    }

    pub fn display_path(&self, path: &ProcPath) -> String {
        path.hops()
            .iter()
            .map(|&p| self.proc_name(p))
            .collect::<Vec<_>>()
            .join("/")
    }
}

/// A non-empty sequence of process ids describing a route through the
/// network. A singleton path stands for a point with no channels.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct ProcPath(Vec<ProcId>);

impl ProcPath {
    pub fn new(hops: Vec<ProcId>) -> Result<Self, NetworkError> {
        if hops.is_empty() {
            return Err(NetworkError::EmptyPath);
        }
        Ok(ProcPath(hops))
    }

    pub fn singleton(proc: ProcId) -> Self {
        ProcPath(vec![proc])
    }

    pub fn hops(&self) -> &[ProcId] {
        &self.0
    }

    pub fn first(&self) -> ProcId {
        self.0[0]
    }

    pub fn last(&self) -> ProcId {
        *self.0.last().unwrap()
    }

    pub fn is_singleton(&self) -> bool {
        self.0.len() == 1
    }

    /// Number of channels traversed.
    pub fn hop_count(&self) -> usize {
        self.0.len() - 1
    }

    /// Composition with the shared endpoint appearing once. Fails unless
    /// `self` ends where `other` begins.
    pub fn compose(&self, other: &ProcPath) -> Result<ProcPath, NetworkError> {
        if self.last() != other.first() {
            return Err(NetworkError::EndpointMismatch(
                format!("{:?}", self.last()),
                format!("{:?}", other.first()),
            ));
        }
        let mut hops = self.0.clone();
        hops.extend_from_slice(&other.0[1..]);
        Ok(ProcPath(hops))
    }

    /// Appends a single hop.
    pub fn extend(&self, next: ProcId) -> ProcPath {
        let mut hops = self.0.clone();
        hops.push(next);
        ProcPath(hops)
    }

    /// The prefix covering the first `hop_count` channels (so `prefix(0)` is
    /// the singleton at the start).
    pub fn prefix(&self, hop_count: usize) -> ProcPath {
        ProcPath(self.0[..=hop_count].to_vec())
    }

    /// The suffix path starting after `hop_count` channels.
    pub fn suffix(&self, hop_count: usize) -> ProcPath {
        ProcPath(self.0[hop_count..].to_vec())
    }
}

impl fmt::Display for ProcPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.0.iter().map(|p| p.0.to_string()).collect();
        write!(f, "[{}]", ids.join(","))
    }
}
