//! Shared fixtures for the benchmark targets.

use std::sync::Arc;

use bcm_core::corpus;
use bcm_core::network::Network;
use bcm_core::sim::{ExternalInput, Run};

pub fn report_net() -> Arc<Network> {
    corpus::visible_zigzag_net()
}

pub fn report_externals(net: &Network) -> Vec<ExternalInput> {
    corpus::zigzag_externals(net)
}

/// The separated report-channel run the knowledge benchmarks query.
pub fn report_run() -> Run {
    corpus::separated_zigzag_run(report_net(), 14)
}
