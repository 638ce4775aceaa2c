//! Channel graph with residual balances, snapshot I/O and routing.

mod routing;
mod snapshot;
pub mod synthetic;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use routing::{find_attack_cycle, find_route, CycleDemand, PaymentPath, SEARCH_BUDGET};
pub use snapshot::{load_snapshot, parse_snapshot, write_snapshot, EdgeRecord, SnapshotFormat};

/// Lifetime assumed for channels whose snapshot row does not carry one.
pub const DEFAULT_LIFETIME: u64 = 1_000_000;

/// Dense node index. Indices follow the lexicographic order of node names,
/// so comparing ids compares names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChannelId(pub u32);

/// Orientation of a transfer on a channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    AtoB,
    BtoA,
}

/// Who is credited when in-flight funds leave the pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReleaseTo {
    Locker,
    Counterparty,
}

/// How a snapshot capacity is split between the two endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BalanceMode {
    Split,
    Unilateral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub a: NodeId,
    pub b: NodeId,
    pub locked_ab: u64,
    pub locked_ba: u64,
    remain_ab: u64,
    remain_ba: u64,
    in_flight: u64,
    pub opened_at: u64,
    pub lifetime: u64,
    open: bool,
}

impl Channel {
    pub fn remain_ab(&self) -> u64 {
        self.remain_ab
    }

    pub fn remain_ba(&self) -> u64 {
        self.remain_ba
    }

    pub fn in_flight(&self) -> u64 {
        self.in_flight
    }

    pub fn is_open(&self) -> bool {
        self.open
    }

    pub fn capacity(&self) -> u64 {
        self.locked_ab + self.locked_ba
    }

    pub fn direction_from(&self, from: NodeId) -> Option<Direction> {
        if from == self.a {
            Some(Direction::AtoB)
        } else if from == self.b {
            Some(Direction::BtoA)
        } else {
            None
        }
    }

    pub fn other(&self, node: NodeId) -> NodeId {
        if node == self.a {
            self.b
        } else {
            self.a
        }
    }

    /// Spendable balance on the side of `from`.
    pub fn remain_from(&self, from: NodeId) -> u64 {
        match self.direction_from(from) {
            Some(Direction::AtoB) => self.remain_ab,
            Some(Direction::BtoA) => self.remain_ba,
            None => 0,
        }
    }

    fn side_mut(&mut self, dir: Direction) -> &mut u64 {
        match dir {
            Direction::AtoB => &mut self.remain_ab,
            Direction::BtoA => &mut self.remain_ba,
        }
    }
}

/// The payment-channel network and its block clock.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelGraph {
    names: Vec<String>,
    channels: Vec<Channel>,
    adjacency: Vec<Vec<(NodeId, ChannelId)>>,
    fees_paid: Vec<u64>,
    clock: u64,
    #[serde(skip)]
    index: HashMap<String, NodeId>,
    #[serde(skip)]
    pairs: HashMap<(NodeId, NodeId), ChannelId>,
}

fn pair_key(u: NodeId, v: NodeId) -> (NodeId, NodeId) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

impl ChannelGraph {
    /// Builds a graph from edge records, validating capacities and rejecting
    /// duplicate or self-looping channels. Record `i` is reported as line
    /// `i + 2` (the header is line 1).
    pub fn from_records(records: &[EdgeRecord], mode: BalanceMode) -> Result<Self> {
        let mut names: Vec<String> = records
            .iter()
            .flat_map(|r| [r.src.clone(), r.dst.clone()])
            .collect();
        names.sort();
        names.dedup();
        let index: HashMap<String, NodeId> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), NodeId(i as u32)))
            .collect();
        let mut graph = ChannelGraph {
            adjacency: vec![Vec::new(); names.len()],
            fees_paid: vec![0; names.len()],
            names,
            channels: Vec::with_capacity(records.len()),
            clock: 0,
            index,
            pairs: HashMap::with_capacity(records.len()),
        };
        for (i, r) in records.iter().enumerate() {
            let line = i as u64 + 2;
            if r.capacity_sat == 0 {
                return Err(Error::Parse {
                    line,
                    reason: "capacity_sat must be positive".into(),
                });
            }
            if r.src == r.dst {
                return Err(Error::Parse {
                    line,
                    reason: format!("self-loop on `{}`", r.src),
                });
            }
            let a = graph.index[&r.src];
            let b = graph.index[&r.dst];
            if graph.pairs.contains_key(&pair_key(a, b)) {
                return Err(Error::DuplicateEdge {
                    line,
                    a: r.src.clone(),
                    b: r.dst.clone(),
                });
            }
            let (bal_a, bal_b) = match mode {
                BalanceMode::Split => (r.capacity_sat / 2, r.capacity_sat - r.capacity_sat / 2),
                BalanceMode::Unilateral => (r.capacity_sat, 0),
            };
            graph.insert_channel(
                a,
                b,
                bal_a,
                bal_b,
                r.opened_at.unwrap_or(0),
                r.lifetime.unwrap_or(DEFAULT_LIFETIME),
            );
        }
        for adj in &mut graph.adjacency {
            adj.sort();
        }
        Ok(graph)
    }

    fn insert_channel(
        &mut self,
        a: NodeId,
        b: NodeId,
        bal_a: u64,
        bal_b: u64,
        opened_at: u64,
        lifetime: u64,
    ) -> ChannelId {
        let id = ChannelId(self.channels.len() as u32);
        self.channels.push(Channel {
            a,
            b,
            locked_ab: bal_a,
            locked_ba: bal_b,
            remain_ab: bal_a,
            remain_ba: bal_b,
            in_flight: 0,
            opened_at,
            lifetime,
            open: true,
        });
        self.adjacency[a.0 as usize].push((b, id));
        self.adjacency[b.0 as usize].push((a, id));
        self.pairs.insert(pair_key(a, b), id);
        id
    }

    /// Funds a new channel at the current block.
    pub fn open_channel(
        &mut self,
        a: NodeId,
        b: NodeId,
        bal_a: u64,
        bal_b: u64,
    ) -> Result<ChannelId> {
        self.check_node(a)?;
        self.check_node(b)?;
        if a == b || self.pairs.contains_key(&pair_key(a, b)) {
            return Err(Error::ChannelExists(
                self.name(a).into(),
                self.name(b).into(),
            ));
        }
        let id = self.insert_channel(a, b, bal_a, bal_b, self.clock, DEFAULT_LIFETIME);
        self.adjacency[a.0 as usize].sort();
        self.adjacency[b.0 as usize].sort();
        Ok(id)
    }

    fn check_node(&self, n: NodeId) -> Result<()> {
        if (n.0 as usize) < self.names.len() {
            Ok(())
        } else {
            Err(Error::UnknownNode(format!("#{}", n.0)))
        }
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.names.len() as u32).map(NodeId)
    }

    pub fn node(&self, name: &str) -> Result<NodeId> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownNode(name.to_string()))
    }

    pub fn name(&self, n: NodeId) -> &str {
        &self.names[n.0 as usize]
    }

    pub fn channel(&self, id: ChannelId) -> &Channel {
        &self.channels[id.0 as usize]
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn channel_between(&self, u: NodeId, v: NodeId) -> Option<ChannelId> {
        self.pairs.get(&pair_key(u, v)).copied()
    }

    /// Neighbours of `n` in ascending id order, with the connecting channel.
    pub fn neighbors(&self, n: NodeId) -> &[(NodeId, ChannelId)] {
        &self.adjacency[n.0 as usize]
    }

    pub fn degree(&self, n: NodeId) -> usize {
        self.adjacency[n.0 as usize].len()
    }

    /// Spendable balance from `from` towards `to`, zero when no open channel.
    pub fn remain(&self, from: NodeId, to: NodeId) -> u64 {
        match self.channel_between(from, to) {
            Some(id) if self.channel(id).open => self.channel(id).remain_from(from),
            _ => 0,
        }
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn advance_to(&mut self, block: u64) -> Result<()> {
        if block < self.clock {
            return Err(Error::ClockRewind {
                now: self.clock,
                requested: block,
            });
        }
        self.clock = block;
        Ok(())
    }

    fn open_mut(&mut self, id: ChannelId) -> Result<&mut Channel> {
        let ch = self
            .channels
            .get_mut(id.0 as usize)
            .ok_or_else(|| Error::UnknownNode(format!("channel #{}", id.0)))?;
        if !ch.open {
            return Err(Error::ChannelClosed(id.0));
        }
        Ok(ch)
    }

    fn side_of(&self, id: ChannelId, node: NodeId) -> Result<Direction> {
        self.channel(id).direction_from(node).ok_or_else(|| {
            Error::UnknownNode(format!("{} is not on channel #{}", self.name(node), id.0))
        })
    }

    /// Moves `amount` from the side of `locker` into the in-flight pool.
    pub fn lock(&mut self, id: ChannelId, locker: NodeId, amount: u64) -> Result<()> {
        let dir = self.side_of(id, locker)?;
        let ch = self.open_mut(id)?;
        let side = ch.side_mut(dir);
        if *side < amount {
            return Err(Error::InsufficientRemain {
                channel: id.0,
                needed: amount,
                available: *side,
            });
        }
        *side -= amount;
        ch.in_flight += amount;
        Ok(())
    }

    /// Returns `amount` of in-flight funds locked by `locker`, crediting either
    /// the locker or its counterparty.
    pub fn release(
        &mut self,
        id: ChannelId,
        locker: NodeId,
        amount: u64,
        to: ReleaseTo,
    ) -> Result<()> {
        let dir = self.side_of(id, locker)?;
        let ch = self.open_mut(id)?;
        if ch.in_flight < amount {
            return Err(Error::InsufficientInFlight {
                channel: id.0,
                needed: amount,
                available: ch.in_flight,
            });
        }
        ch.in_flight -= amount;
        let target = match (to, dir) {
            (ReleaseTo::Locker, d) => d,
            (ReleaseTo::Counterparty, Direction::AtoB) => Direction::BtoA,
            (ReleaseTo::Counterparty, Direction::BtoA) => Direction::AtoB,
        };
        *ch.side_mut(target) += amount;
        Ok(())
    }

    /// Closes a channel on-chain. The closer pays `mining_fee`; balances freeze.
    pub fn close(&mut self, id: ChannelId, closer: NodeId, mining_fee: u64) -> Result<()> {
        self.side_of(id, closer)?;
        let ch = self.open_mut(id)?;
        if ch.in_flight != 0 {
            return Err(Error::ChannelBusy(id.0));
        }
        ch.open = false;
        self.fees_paid[closer.0 as usize] += mining_fee;
        Ok(())
    }

    /// Mining fees paid so far by `n`.
    pub fn fees_paid(&self, n: NodeId) -> u64 {
        self.fees_paid[n.0 as usize]
    }

    /// Off-chain balance of `n` across all its channels, net of mining fees.
    pub fn balance(&self, n: NodeId) -> i128 {
        let held: u64 = self
            .neighbors(n)
            .iter()
            .map(|&(_, id)| self.channel(id).remain_from(n))
            .sum();
        held as i128 - self.fees_paid[n.0 as usize] as i128
    }

    /// Sum of every channel's remains plus in-flight funds.
    pub fn total_funds(&self) -> u128 {
        self.channels
            .iter()
            .map(|c| (c.remain_ab + c.remain_ba + c.in_flight) as u128)
            .sum()
    }

    pub fn total_fees_paid(&self) -> u128 {
        self.fees_paid.iter().map(|&f| f as u128).sum()
    }

    /// Checks per-channel conservation.
    pub fn is_conserved(&self) -> bool {
        self.channels
            .iter()
            .all(|c| c.remain_ab + c.remain_ba + c.in_flight == c.locked_ab + c.locked_ba)
    }

    /// Human-readable `a-b` label of a channel.
    pub fn channel_label(&self, id: ChannelId) -> String {
        let c = self.channel(id);
        format!("{}-{}", self.name(c.a), self.name(c.b))
    }

    /// Rebuilds lookup tables after deserialisation.
    pub fn reindex(&mut self) {
        self.index = self
            .names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), NodeId(i as u32)))
            .collect();
        self.pairs = self
            .channels
            .iter()
            .enumerate()
            .map(|(i, c)| (pair_key(c.a, c.b), ChannelId(i as u32)))
            .collect();
    }
}
