//! Random transaction workloads.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::netmodel::{ChannelGraph, NodeId};

/// A transaction along a fixed simple path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Walk {
    pub hops: Vec<NodeId>,
    pub amount: u64,
}

/// A transaction between two endpoints, routed at execution time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub src: NodeId,
    pub dst: NodeId,
    pub amount: u64,
}

const WALK_ATTEMPTS: usize = 10_000;

/// `count` simple random walks whose hop count is uniform in `hops` and
/// whose amount is uniform in `amounts`. Walks that get stuck are redrawn
/// from a fresh start.
pub fn random_walks<R: Rng + ?Sized>(
    graph: &ChannelGraph,
    count: usize,
    hops: (usize, usize),
    amounts: (u64, u64),
    rng: &mut R,
) -> Result<Vec<Walk>> {
    if hops.0 == 0 || hops.0 > hops.1 {
        return Err(invalid("kappa", "hop range must satisfy 1 <= min <= max"));
    }
    if amounts.0 == 0 || amounts.0 > amounts.1 {
        return Err(invalid(
            "alpha",
            "amount range must satisfy 1 <= min <= max",
        ));
    }
    if graph.node_count() < 2 {
        return Err(invalid("snapshot", "needs at least two nodes"));
    }
    let n = graph.node_count() as u32;
    let mut out = Vec::with_capacity(count);
    let mut visited = vec![false; graph.node_count()];
    for _ in 0..count {
        let kappa = rng.gen_range(hops.0..=hops.1);
        let amount = rng.gen_range(amounts.0..=amounts.1);
        let mut found = None;
        for _ in 0..WALK_ATTEMPTS {
            let start = NodeId(rng.gen_range(0..n));
            let mut path = vec![start];
            visited[start.0 as usize] = true;
            while path.len() <= kappa {
                let here = *path.last().expect("non-empty");
                let next: Vec<NodeId> = graph
                    .neighbors(here)
                    .iter()
                    .map(|&(w, _)| w)
                    .filter(|w| !visited[w.0 as usize])
                    .collect();
                let Some(&w) = next.choose(rng) else { break };
                visited[w.0 as usize] = true;
                path.push(w);
            }
            for h in &path {
                visited[h.0 as usize] = false;
            }
            if path.len() == kappa + 1 {
                found = Some(path);
                break;
            }
        }
        let hops = found
            .ok_or_else(|| invalid("kappa", format!("no simple walk of {kappa} hops found")))?;
        out.push(Walk { hops, amount });
    }
    Ok(out)
}

/// `count` requests between distinct uniformly drawn endpoints.
pub fn random_requests<R: Rng + ?Sized>(
    graph: &ChannelGraph,
    count: usize,
    amounts: (u64, u64),
    rng: &mut R,
) -> Result<Vec<Request>> {
    if amounts.0 == 0 || amounts.0 > amounts.1 {
        return Err(invalid(
            "alpha",
            "amount range must satisfy 1 <= min <= max",
        ));
    }
    let n = graph.node_count() as u32;
    if n < 2 {
        return Err(invalid("snapshot", "needs at least two nodes"));
    }
    Ok((0..count)
        .map(|_| {
            let src = rng.gen_range(0..n);
            let mut dst = rng.gen_range(0..n - 1);
            if dst >= src {
                dst += 1;
            }
            Request {
                src: NodeId(src),
                dst: NodeId(dst),
                amount: rng.gen_range(amounts.0..=amounts.1),
            }
        })
        .collect())
}
