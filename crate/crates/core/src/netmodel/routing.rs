use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{ChannelGraph, NodeId};
use crate::economics::{EconomicParams, TimeoutSchedule, Timing};

/// Node expansions allowed per cycle length in [`find_attack_cycle`].
pub const SEARCH_BUDGET: usize = 50_000;

/// A route `U_0 .. U_kappa` with per-hop amounts and timeouts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaymentPath {
    pub hops: Vec<NodeId>,
    pub amounts: Vec<u64>,
    pub timeouts: Vec<u64>,
}

impl PaymentPath {
    pub fn kappa(&self) -> usize {
        self.hops.len().saturating_sub(1)
    }

    pub fn sender(&self) -> NodeId {
        self.hops[0]
    }

    pub fn payee(&self) -> NodeId {
        self.hops[self.hops.len() - 1]
    }

    /// Path over `hops` delivering `amount`, with fee-recursion amounts and
    /// the standard timeout schedule.
    pub fn with_schedule(
        hops: Vec<NodeId>,
        amount: u64,
        econ: &EconomicParams,
        timing: Timing,
    ) -> Self {
        let kappa = hops.len() - 1;
        let amounts = crate::economics::hop_amounts(amount, kappa, econ);
        let timeouts = TimeoutSchedule::new(kappa, timing)
            .map(|s| s.timeouts)
            .unwrap_or_default();
        Self {
            hops,
            amounts,
            timeouts,
        }
    }
}

/// Shortest feasible route from `src` to `dst` delivering `amount`.
///
/// Hop amounts depend only on the number of hops left to the payee, so a
/// layered search backwards from `dst` yields exact feasible distances; the
/// forward walk then takes the smallest eligible neighbour at each step.
pub fn find_route(
    graph: &ChannelGraph,
    src: NodeId,
    dst: NodeId,
    amount: u64,
    max_len: usize,
    econ: &EconomicParams,
    timing: Timing,
) -> Option<PaymentPath> {
    if src == dst || max_len == 0 {
        return None;
    }
    let n = graph.node_count();
    let mut dist = vec![usize::MAX; n];
    // need[m]: amount carried by a hop that is m hops away from the payee.
    let mut need = vec![0u64, amount];
    dist[dst.0 as usize] = 0;
    let mut frontier = vec![dst];
    let mut layer = 0;
    while !frontier.is_empty() && dist[src.0 as usize] == usize::MAX && layer < max_len {
        layer += 1;
        if need.len() <= layer {
            let prev = need[layer - 1];
            need.push(prev + econ.fee_sat(prev));
        }
        let mut next = Vec::new();
        for &w in &frontier {
            for &(u, _) in graph.neighbors(w) {
                if dist[u.0 as usize] == usize::MAX && graph.remain(u, w) >= need[layer] {
                    dist[u.0 as usize] = layer;
                    next.push(u);
                }
            }
        }
        frontier = next;
    }
    let kappa = dist[src.0 as usize];
    if kappa == usize::MAX {
        return None;
    }
    let mut hops = vec![src];
    let mut u = src;
    for left in (1..=kappa).rev() {
        let w = graph
            .neighbors(u)
            .iter()
            .map(|&(w, _)| w)
            .find(|&w| dist[w.0 as usize] == left - 1 && graph.remain(u, w) >= need[left])?;
        hops.push(w);
        u = w;
    }
    Some(PaymentPath::with_schedule(hops, amount, econ, timing))
}

/// Liquidity a cycle of a given length needs at each hop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleDemand {
    /// Amount the sender of hop `j` locks towards the receiver.
    pub forward: Vec<u64>,
    /// Amount the receiver of hop `j` locks on its own side (penalties).
    pub reverse: Vec<u64>,
}

struct CycleSearch<'a> {
    graph: &'a ChannelGraph,
    corrupt: NodeId,
    kappa: usize,
    demand: &'a CycleDemand,
    dist: &'a [usize],
    visited: Vec<bool>,
    path: Vec<NodeId>,
    budget: usize,
}

impl CycleSearch<'_> {
    fn hop_ok(&self, u: NodeId, w: NodeId, j: usize) -> bool {
        self.graph.remain(u, w) >= self.demand.forward[j]
            && self.graph.remain(w, u) >= self.demand.reverse[j]
    }

    fn extend(&mut self, u: NodeId) -> bool {
        if self.budget == 0 {
            return false;
        }
        self.budget -= 1;
        let depth = self.path.len() - 1;
        let left = self.kappa - depth;
        for &(w, _) in self.graph.neighbors(u) {
            if left == 1 {
                if w == self.corrupt && self.hop_ok(u, w, depth) {
                    self.path.push(w);
                    return true;
                }
                continue;
            }
            if w == self.corrupt || self.visited[w.0 as usize] || self.dist[w.0 as usize] > left - 1
            {
                continue;
            }
            if !self.hop_ok(u, w, depth) {
                continue;
            }
            self.visited[w.0 as usize] = true;
            self.path.push(w);
            if self.extend(w) {
                return true;
            }
            self.path.pop();
            self.visited[w.0 as usize] = false;
        }
        false
    }
}

fn hop_distances(graph: &ChannelGraph, from: NodeId) -> Vec<usize> {
    let mut dist = vec![usize::MAX; graph.node_count()];
    dist[from.0 as usize] = 0;
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        for &(w, id) in graph.neighbors(u) {
            if graph.channel(id).is_open() && dist[w.0 as usize] == usize::MAX {
                dist[w.0 as usize] = dist[u.0 as usize] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Simple cycle through `corrupt` of exactly `target_len` hops, or the
/// longest feasible shorter one. `demand(kappa)` gives the liquidity a cycle
/// of length `kappa` needs, or `None` to skip that length. Cycles have at
/// least three hops since a channel cannot be traversed twice.
///
/// Each length is searched depth-first in ascending neighbour order with at
/// most [`SEARCH_BUDGET`] expansions.
pub fn find_attack_cycle(
    graph: &ChannelGraph,
    corrupt: NodeId,
    target_len: usize,
    timing: Timing,
    demand: impl Fn(usize) -> Option<CycleDemand>,
) -> Option<PaymentPath> {
    if graph.degree(corrupt) < 2 {
        return None;
    }
    let dist = hop_distances(graph, corrupt);
    for kappa in (3..=target_len).rev() {
        let Some(d) = demand(kappa) else { continue };
        let mut search = CycleSearch {
            graph,
            corrupt,
            kappa,
            demand: &d,
            dist: &dist,
            visited: vec![false; graph.node_count()],
            path: vec![corrupt],
            budget: SEARCH_BUDGET,
        };
        if search.extend(corrupt) {
            let timeouts = TimeoutSchedule::new(kappa, timing).ok()?.timeouts;
            return Some(PaymentPath {
                hops: search.path,
                amounts: d.forward,
                timeouts,
            });
        }
    }
    None
}
