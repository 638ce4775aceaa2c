//! Budget allocation, corrupt-node selection and self-payment attacks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::contracts::{
    draw_blind, lock_all, penalty_chain, preprocess_with_blind, release, ContractSet, LedgerEvent,
    LockOutcome, PayeeAction, PenaltyTerms, RunContext, RunOutcome, Secrets,
};
use crate::economics::{
    hop_amounts, round_half_up, total_timeout, EconomicParams, TimeoutSchedule, Timing,
};
use crate::error::{invalid, Result};
use crate::netmodel::{
    find_attack_cycle, ChannelGraph, ChannelId, CycleDemand, NodeId, PaymentPath,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    Grief,
    WaitRejectAtDeadline,
}

impl Strategy {
    pub fn payee_action(self) -> PayeeAction {
        match self {
            Strategy::Grief => PayeeAction::Grief,
            Strategy::WaitRejectAtDeadline => PayeeAction::WaitRejectAtDeadline,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackerConfig {
    pub budget: u64,
    /// Bribe-funded value each corrupt node routes.
    pub alpha: u64,
    pub setup_cost: u64,
    pub timing: Timing,
    /// Maximum path length of the target protocol.
    pub n: usize,
    pub strategy: Strategy,
    pub econ: EconomicParams,
}

impl Default for AttackerConfig {
    fn default() -> Self {
        Self {
            budget: 100_000_000,
            alpha: 100_000,
            setup_cost: 0,
            timing: Timing::default(),
            n: 20,
            strategy: Strategy::WaitRejectAtDeadline,
            econ: EconomicParams::default().without_fees(),
        }
    }
}

impl AttackerConfig {
    /// Bribe paid per corrupt node.
    pub fn bribe(&self) -> f64 {
        self.econ
            .bribe(self.alpha as f64, self.setup_cost as f64, self.timing.d)
    }

    /// Number of nodes the budget can corrupt.
    pub fn slots(&self) -> usize {
        let l = self.bribe();
        if l <= 0.0 {
            return 0;
        }
        (self.budget as f64 / l).floor() as usize
    }
}

/// Pendant nodes, then degree-two nodes, by degree then id.
pub fn candidate_nodes(graph: &ChannelGraph) -> Vec<NodeId> {
    let mut out: Vec<NodeId> = graph
        .nodes()
        .filter(|&v| matches!(graph.degree(v), 1 | 2))
        .collect();
    out.sort_by_key(|&v| (graph.degree(v), v));
    out
}

/// The first `floor(budget / bribe)` candidates.
pub fn select_corrupt_nodes(graph: &ChannelGraph, config: &AttackerConfig) -> Vec<NodeId> {
    let mut c = candidate_nodes(graph);
    c.truncate(config.slots());
    c
}

/// One planned self-payment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackInstance {
    pub corrupt: NodeId,
    pub cycle: PaymentPath,
    /// `alpha` for HTLC, the reduced value `v` under penalties.
    pub payment_value: u64,
    /// Penalty the corrupt payee locks.
    pub penalty_locked: u64,
    /// Payment and penalty collateral locked by the other parties.
    pub coins_locked_by_victims: u64,
    pub blind: Option<usize>,
    pub aux_channel: Option<ChannelId>,
    pub timing: Timing,
}

/// Self-payment value for a cycle of `kappa` hops.
fn payment_value(
    terms: &PenaltyTerms,
    alpha: u64,
    kappa: usize,
    blind: Option<usize>,
    timing: Timing,
) -> u64 {
    let gamma = terms.gamma();
    if gamma == 0.0 || matches!(terms, PenaltyTerms::None) {
        return alpha;
    }
    let total = total_timeout(kappa, timing) as f64;
    let span = match (terms.guarantee(), blind) {
        (Some(_), Some(phi)) => total.max((phi * timing.d as usize) as f64),
        _ => total,
    };
    (alpha as f64 / (1.0 + gamma * span)).floor() as u64
}

fn demand_for(
    terms: &PenaltyTerms,
    config: &AttackerConfig,
    kappa: usize,
    blind: Option<usize>,
) -> Option<CycleDemand> {
    let v = payment_value(terms, config.alpha, kappa, blind, config.timing);
    if v == 0 {
        return None;
    }
    let forward = hop_amounts(v, kappa, &config.econ);
    let reverse = match terms {
        PenaltyTerms::None => vec![0; kappa],
        _ => {
            let timeouts = TimeoutSchedule::new(kappa, config.timing).ok()?.timeouts;
            let blind = terms.guarantee().and(blind);
            let (cgp, _) =
                penalty_chain(&forward, &timeouts, terms.gamma(), blind, config.timing.d);
            cgp.into_iter().map(round_half_up).collect()
        }
    };
    Some(CycleDemand { forward, reverse })
}

fn target_len(terms: &PenaltyTerms, n: usize) -> usize {
    match terms.guarantee() {
        Some(p) => n.min(p.max_len),
        None => n,
    }
}

/// Highest-degree node not adjacent to `v`, ties to the smallest id.
fn aux_peer(graph: &ChannelGraph, v: NodeId) -> Option<NodeId> {
    graph
        .nodes()
        .filter(|&w| w != v && graph.channel_between(v, w).is_none())
        .max_by_key(|&w| (graph.degree(w), std::cmp::Reverse(w)))
}

/// Builds the self-payment cycle for `corrupt`. Pendant nodes first open one
/// auxiliary channel. Returns `None` when no cycle of at least three hops
/// fits the liquidity.
pub fn plan_attack<R: Rng + ?Sized>(
    graph: &mut ChannelGraph,
    corrupt: NodeId,
    terms: &PenaltyTerms,
    config: &AttackerConfig,
    rng: &mut R,
) -> Result<Option<AttackInstance>> {
    if config.n < 3 {
        return Err(invalid("n", "an attack cycle needs at least three hops"));
    }
    let target = target_len(terms, config.n);
    if target < 3 {
        return Ok(None);
    }
    let blinds: Vec<Option<usize>> = match terms.guarantee() {
        Some(p) => (0..=target)
            .map(|k| {
                if k >= 3 {
                    draw_blind(k, p.max_len, rng).ok()
                } else {
                    None
                }
            })
            .collect(),
        None => vec![None; target + 1],
    };
    let demand = |k: usize| demand_for(terms, config, k, blinds[k]);
    let mut aux = None;
    let cycle = if graph.degree(corrupt) < 2 {
        let Some(peer) = aux_peer(graph, corrupt) else {
            return Ok(None);
        };
        let fund = hop_amounts(config.alpha, target, &config.econ)[0];
        let mut trial = graph.clone();
        trial.open_channel(corrupt, peer, fund, fund)?;
        let Some(c) = find_attack_cycle(&trial, corrupt, target, config.timing, demand) else {
            return Ok(None);
        };
        aux = Some(graph.open_channel(corrupt, peer, fund, fund)?);
        c
    } else {
        match find_attack_cycle(graph, corrupt, target, config.timing, demand) {
            Some(c) => c,
            None => return Ok(None),
        }
    };
    let kappa = cycle.kappa();
    let d =
        demand_for(terms, config, kappa, blinds[kappa]).expect("cycle was found with this demand");
    let victims = d.forward[1..].iter().sum::<u64>() + d.reverse[..kappa - 1].iter().sum::<u64>();
    Ok(Some(AttackInstance {
        corrupt,
        payment_value: d.forward[kappa - 1],
        penalty_locked: d.reverse[kappa - 1],
        coins_locked_by_victims: victims,
        blind: terms.guarantee().and(blinds[kappa]),
        cycle,
        aux_channel: aux,
        timing: config.timing,
    }))
}

/// Locks both rounds of an instance without resolving it.
pub fn lock_attack<R: Rng + ?Sized>(
    graph: &mut ChannelGraph,
    instance: &AttackInstance,
    terms: &PenaltyTerms,
    ctx: &RunContext,
    rng: &mut R,
) -> Result<(ContractSet, Secrets, LockOutcome)> {
    let (env, secrets) = preprocess_with_blind(
        &instance.cycle,
        *terms,
        instance.timing,
        instance.blind,
        rng,
    )?;
    let mut set = ContractSet::new(env, graph.clock());
    let out = lock_all(graph, &mut set, ctx)?;
    Ok((set, secrets, out))
}

/// What one executed attack did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub corrupt: String,
    pub cycle: Vec<String>,
    pub payment_value: u64,
    /// Collateral victims had locked once both rounds completed.
    pub victim_locked: u64,
    pub locked_blocks: u64,
    /// Net penalty the corrupt node paid.
    pub penalty_paid: i128,
    pub channels_closed: usize,
    pub outcome: RunOutcome,
    pub events: Vec<LedgerEvent>,
}

/// Plans nothing; runs the full protocol for `instance` with the payee
/// following the configured strategy.
pub fn execute_attack<R: Rng + ?Sized>(
    graph: &mut ChannelGraph,
    instance: &AttackInstance,
    terms: &PenaltyTerms,
    config: &AttackerConfig,
    ctx: &RunContext,
    rng: &mut R,
) -> Result<AttackOutcome> {
    let corrupt = instance.corrupt;
    let before = graph.balance(corrupt);
    let open_before = graph.channels().iter().filter(|c| c.is_open()).count();
    let start = graph.clock();
    let (mut set, secrets, out) = lock_attack(graph, instance, terms, ctx, rng)?;
    let victim_locked = set.locked_by_others(corrupt);
    let outcome = match out {
        LockOutcome::Aborted(a) => RunOutcome::Aborted(a),
        LockOutcome::Locked => release(
            graph,
            &mut set,
            &secrets,
            config.strategy.payee_action(),
            ctx,
        )?,
    };
    let open_after = graph.channels().iter().filter(|c| c.is_open()).count();
    Ok(AttackOutcome {
        corrupt: graph.name(corrupt).to_string(),
        cycle: instance
            .cycle
            .hops
            .iter()
            .map(|&h| graph.name(h).to_string())
            .collect(),
        payment_value: instance.payment_value,
        victim_locked,
        locked_blocks: graph.clock() - start,
        penalty_paid: before - graph.balance(corrupt),
        channels_closed: open_before - open_after,
        outcome,
        events: set.events,
    })
}

/// Totals of a budget-exhausting campaign.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub instances: usize,
    pub skipped: usize,
    pub victim_locked: u64,
    pub corrupt: Vec<NodeId>,
}

/// Corrupts candidates in order until the budget is spent, locking every
/// instance on the shared graph without resolving it. Candidates with no
/// feasible cycle do not use up a slot.
pub fn run_campaign<R: Rng + ?Sized>(
    graph: &mut ChannelGraph,
    terms: &PenaltyTerms,
    config: &AttackerConfig,
    ctx: &RunContext,
    rng: &mut R,
) -> Result<CampaignSummary> {
    let slots = config.slots();
    let mut summary = CampaignSummary::default();
    for v in candidate_nodes(graph) {
        if summary.instances == slots {
            break;
        }
        let Some(inst) = plan_attack(graph, v, terms, config, rng)? else {
            summary.skipped += 1;
            continue;
        };
        let (set, _, _) = lock_attack(graph, &inst, terms, ctx, rng)?;
        summary.victim_locked += set.locked_by_others(v);
        summary.instances += 1;
        summary.corrupt.push(v);
    }
    Ok(summary)
}
