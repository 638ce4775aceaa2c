//! Shared fixtures for the benchmarks.

use griefsim::netmodel::synthetic::{scale_free, SyntheticParams};
use griefsim::{BalanceMode, ChannelGraph};

/// Seeded scale-free graph of `nodes` nodes with split balances.
pub fn fixture_graph(nodes: usize, seed: u64) -> ChannelGraph {
    let params = SyntheticParams {
        nodes,
        seed,
        ..Default::default()
    };
    ChannelGraph::from_records(&scale_free(&params), BalanceMode::Split)
        .expect("generator output is valid")
}
