//! Seeded scale-free topology used when no real snapshot is available.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use super::{BalanceMode, ChannelGraph, EdgeRecord};

/// Seed of the bundled fallback graph.
pub const BUNDLED_SEED: u64 = 0x5EED_2019;
/// Node count of the bundled fallback graph.
pub const BUNDLED_NODES: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParams {
    pub nodes: usize,
    pub seed: u64,
    /// Probability that a newcomer opens 1, 2 or 3 channels.
    pub attach: [f64; 3],
    pub median_capacity: f64,
    /// Standard deviation of log-capacity.
    pub sigma: f64,
    pub min_capacity: u64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            nodes: BUNDLED_NODES,
            seed: BUNDLED_SEED,
            attach: [0.4, 0.35, 0.25],
            median_capacity: 2_000_000.0,
            sigma: 1.0,
            min_capacity: 20_000,
        }
    }
}

/// Preferential-attachment edge list. Each newcomer links to one to three
/// existing nodes chosen with probability proportional to degree.
pub fn scale_free(params: &SyntheticParams) -> Vec<EdgeRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let width = params.nodes.saturating_sub(1).max(1).to_string().len();
    let name = |i: usize| format!("n{i:0width$}");
    let caps = LogNormal::new(params.median_capacity.ln(), params.sigma).expect("valid log-normal");
    let mut edges = Vec::new();
    let mut endpoints: Vec<usize> = Vec::new();
    let mut link = |a: usize, b: usize, rng: &mut ChaCha8Rng, endpoints: &mut Vec<usize>| {
        let cap = (caps.sample(rng) as u64).max(params.min_capacity);
        edges.push(EdgeRecord {
            src: name(a),
            dst: name(b),
            capacity_sat: cap,
            opened_at: None,
            lifetime: None,
        });
        endpoints.push(a);
        endpoints.push(b);
    };
    let seed_size = params.nodes.min(3);
    for a in 0..seed_size {
        for b in a + 1..seed_size {
            link(a, b, &mut rng, &mut endpoints);
        }
    }
    for v in seed_size..params.nodes {
        let roll: f64 = rng.gen();
        let m = if roll < params.attach[0] {
            1
        } else if roll < params.attach[0] + params.attach[1] {
            2
        } else {
            3
        };
        let mut chosen: Vec<usize> = Vec::with_capacity(m);
        while chosen.len() < m.min(v) {
            let t = *endpoints.choose(&mut rng).expect("seed clique present");
            if !chosen.contains(&t) {
                chosen.push(t);
            }
        }
        chosen.sort_unstable();
        for t in chosen {
            link(t, v, &mut rng, &mut endpoints);
        }
    }
    edges
}

/// The bundled fallback graph with split balances.
pub fn bundled() -> ChannelGraph {
    ChannelGraph::from_records(&scale_free(&SyntheticParams::default()), BalanceMode::Split)
        .expect("generator emits a valid edge list")
}
