//! Node addressing: `P@k` names the k-th state of process P in a run
//! (k = 0 is the initial state); `P@k/Q/R` names the chain endpoint along
//! the path P, Q, R starting at that state.

use bcm_core::causality::GeneralNode;
use bcm_core::network::{Network, ProcPath};
use bcm_core::sim::Run;
use bcm_core::state::NodeId;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AddrError {
    #[error("bad node address {0:?}: expected P@k or P@k/Q/...")]
    Malformed(String),
    #[error("unknown process {0:?}")]
    UnknownProcess(String),
    #[error("no channel {0:?} -> {1:?}")]
    NoChannel(String, String),
    #[error("node {0:?} does not appear in the trace")]
    NotInRun(String),
}

pub fn parse_node_id(net: &Network, text: &str) -> Result<NodeId, AddrError> {
    let (name, index) = text
        .split_once('@')
        .ok_or_else(|| AddrError::Malformed(text.into()))?;
    let proc = net
        .proc_id(name)
        .ok_or_else(|| AddrError::UnknownProcess(name.into()))?;
    let index: u32 = index
        .parse()
        .map_err(|_| AddrError::Malformed(text.into()))?;
    Ok(NodeId::new(proc, index))
}

pub fn parse_general(net: &Network, run: &Run, text: &str) -> Result<GeneralNode, AddrError> {
    let mut parts = text.split('/');
    let head = parts
        .next()
        .ok_or_else(|| AddrError::Malformed(text.into()))?;
    let id = parse_node_id(net, head)?;
    let base = run
        .node(id)
        .ok_or_else(|| AddrError::NotInRun(head.into()))?;
    let mut hops = vec![id.proc];
    for part in parts {
        let next = net
            .proc_id(part)
            .ok_or_else(|| AddrError::UnknownProcess(part.into()))?;
        if net.bounds(*hops.last().unwrap(), next).is_none() {
            return Err(AddrError::NoChannel(
                net.proc_name(*hops.last().unwrap()).into(),
                part.into(),
            ));
        }
        hops.push(next);
    }
    let path = ProcPath::new(hops).expect("non-empty by construction");
    Ok(GeneralNode::new(base, path).expect("path starts at base"))
}

pub fn format_node_id(net: &Network, id: NodeId) -> String {
    format!("{}@{}", net.proc_name(id.proc), id.index)
}

pub fn format_general(net: &Network, node: &GeneralNode) -> String {
    let mut s = format!("{}@{}", net.proc_name(node.base.proc()), node.base.index());
    for hop in &node.path.hops()[1..] {
        s.push('/');
        s.push_str(net.proc_name(*hop));
    }
    s
}
