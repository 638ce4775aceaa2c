use super::{
    settle::unwind, Abort, CancellationContract, Check, CheckPolicy, ContractSet, ContractState,
    EventKind, LockOutcome, PaymentContract, RunContext,
};
use crate::economics::round_half_up;
use crate::games::{cutoff_theta, GameProtocol, GameSpec};
use crate::netmodel::ChannelGraph;
use crate::Result;

fn close_enough(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

/// Belief test: forward only while the fee outweighs the
/// expected opportunity cost of `amount` idle for `timeout` blocks.
fn gp_belief_ok(ctx: &RunContext, amount: u64, timeout: u64) -> bool {
    let CheckPolicy::Rational { theta, .. } = ctx.policy else {
        return true;
    };
    let f = ctx.econ.fee(amount as f64);
    if f <= 0.0 {
        return false;
    }
    theta < f / (f + ctx.econ.opportunity_cost(timeout as f64, amount as f64))
}

fn min_comp_ok(ctx: &RunContext, set: &ContractSet, amount: u64, timeout: u64) -> bool {
    match (ctx.policy, set.envelope.terms.guarantee()) {
        (CheckPolicy::Rational { .. }, Some(p)) => {
            let a = amount as f64;
            set.envelope.gamma() * a * timeout as f64 >= p.zeta * a * (1.0 - 1e-12)
        }
        _ => true,
    }
}

fn abort(
    graph: &mut ChannelGraph,
    set: &mut ContractSet,
    round: u8,
    node: usize,
    check: Check,
) -> Result<LockOutcome> {
    unwind(graph, set)?;
    Ok(LockOutcome::Aborted(Abort { round, node, check }))
}

/// First locking round: cancellation contracts formed from the payee back
/// to the sender. A no-op for plain HTLC.
pub fn lock_round1(
    graph: &mut ChannelGraph,
    set: &mut ContractSet,
    ctx: &RunContext,
) -> Result<LockOutcome> {
    let env = &set.envelope;
    if env.terms.protocol() == super::Protocol::Htlc {
        return Ok(LockOutcome::Locked);
    }
    let kappa = env.path.kappa();
    let hops = env.path.hops.clone();
    let timing = env.timing;
    let gamma = env.gamma();
    let last = kappa - 1;

    // Payee.
    let rec = env.record(last).clone();
    let payee_ok = [
        (rec.timeout >= timing.delta, Check::PayeeTimeout),
        (rec.amount == env.path.amounts[last], Check::PayeeAmount),
        (
            env.terms
                .guarantee()
                .map_or(true, |p| rec.cgp <= p.k * rec.amount as f64 * (1.0 + 1e-9)),
            Check::PenaltyCapExceeded,
        ),
        (rec.hashes == env.hashes, Check::HashMismatch),
        (
            graph.remain(hops[kappa], hops[last]) >= round_half_up(rec.cgp),
            Check::InsufficientRemain,
        ),
    ];
    if let Some(&(_, check)) = payee_ok.iter().find(|(ok, _)| !ok) {
        return abort(graph, set, 1, kappa, check);
    }

    for i in (0..kappa).rev() {
        let env = &set.envelope;
        let rec = env.record(i).clone();
        let u = hops[i];
        let checks: Vec<(bool, Check)> = if i > 0 {
            let prev = env.record(i - 1);
            vec![
                (
                    gp_belief_ok(ctx, rec.amount, rec.timeout),
                    Check::BeliefTooHigh,
                ),
                (rec.hashes == prev.hashes, Check::HashMismatch),
                (
                    rec.timeout + timing.delta <= prev.timeout,
                    Check::TimeoutOrder,
                ),
                (
                    close_enough(
                        rec.cgp - gamma * rec.amount as f64 * rec.timeout as f64,
                        prev.cgp,
                    ),
                    Check::PenaltyTelescoping,
                ),
                (
                    min_comp_ok(ctx, set, rec.amount, rec.timeout),
                    Check::MinCompensationViolated,
                ),
                (
                    graph.remain(u, hops[i + 1]) >= rec.amount
                        && graph.remain(u, hops[i - 1]) >= round_half_up(prev.cgp),
                    Check::InsufficientRemain,
                ),
            ]
        } else {
            let min_comp = match (ctx.policy, env.terms.guarantee()) {
                (CheckPolicy::Rational { .. }, Some(p)) => {
                    rec.cgp >= p.zeta * rec.amount as f64 * (1.0 - 1e-12)
                }
                _ => true,
            };
            vec![
                (
                    gp_belief_ok(ctx, rec.amount, rec.timeout),
                    Check::BeliefTooHigh,
                ),
                (rec.timeout == env.path.timeouts[0], Check::PayerTimeout),
                (min_comp, Check::MinCompensationViolated),
                (rec.hashes == env.hashes, Check::HashMismatch),
                (
                    graph.remain(u, hops[1]) >= rec.amount,
                    Check::InsufficientRemain,
                ),
            ]
        };
        if let Some(&(_, check)) = checks.iter().find(|(ok, _)| !ok) {
            return abort(graph, set, 1, i, check);
        }
        let locker = hops[i + 1];
        let channel = graph.channel_between(u, locker).expect("path channel");
        let cgp_sat = round_half_up(rec.cgp);
        if !graph.channel(channel).is_open() || graph.remain(locker, u) < cgp_sat {
            return abort(graph, set, 1, i + 1, Check::InsufficientRemain);
        }
        graph.lock(channel, locker, cgp_sat)?;
        set.cancellations[i] = Some(CancellationContract {
            hop: i,
            channel,
            payer_side: u,
            penalty_locker: locker,
            cgp: rec.cgp,
            cgp_sat,
            timeout: rec.timeout,
            hashes: rec.hashes,
            formed_at: graph.clock(),
            state: ContractState::Active,
        });
        let id = set.contract_id("cancel", i);
        set.emit(graph, channel, EventKind::Lock, locker, cgp_sat, id);
    }
    Ok(LockOutcome::Locked)
}

fn htlc_belief_ok(graph: &ChannelGraph, set: &ContractSet, ctx: &RunContext, i: usize) -> bool {
    let CheckPolicy::Rational { theta, q } = ctx.policy else {
        return true;
    };
    let env = &set.envelope;
    let (u, w) = (env.path.hops[i], env.path.hops[i + 1]);
    let Some(id) = graph.channel_between(u, w) else {
        return false;
    };
    let ch = graph.channel(id);
    let rec = env.record(i);
    let elapsed = rec.timeout + graph.clock().saturating_sub(ch.opened_at);
    let kappa = env.path.kappa();
    let spec = GameSpec {
        protocol: GameProtocol::Htlc,
        alpha: rec.amount as f64,
        n: kappa,
        kappa,
        timing: env.timing,
        theta,
        q,
        econ: ctx.econ,
        remain_fwd: graph.remain(u, w) as f64,
        remain_bwd: 0.0,
        t_tilde: ch.lifetime.saturating_sub(elapsed) as f64,
        setup_cost: 0.0,
        gamma: 0.0,
    };
    theta < cutoff_theta(&spec)
}

/// Second locking round: payment contracts formed from the sender forward.
pub fn lock_round2(
    graph: &mut ChannelGraph,
    set: &mut ContractSet,
    ctx: &RunContext,
) -> Result<LockOutcome> {
    let kappa = set.path().kappa();
    let gp = set.protocol() != super::Protocol::Htlc;
    let delta = set.envelope.timing.delta;
    for i in 0..kappa {
        let env = &set.envelope;
        let rec = env.record(i).clone();
        let (u, w) = (env.path.hops[i], env.path.hops[i + 1]);
        let has_cancel =
            matches!(&set.cancellations[i], Some(c) if c.state == ContractState::Active);
        let mut checks = vec![(!gp || has_cancel, Check::MissingCancellation)];
        if i > 0 {
            let prev = env.record(i - 1);
            checks.push((prev.timeout >= rec.timeout + delta, Check::TimeoutOrder));
            checks.push((
                prev.amount == rec.amount + ctx.econ.fee_sat(rec.amount),
                Check::AmountRecursion,
            ));
        }
        if !gp {
            checks.push((htlc_belief_ok(graph, set, ctx, i), Check::BeliefTooHigh));
        }
        checks.push((graph.remain(u, w) >= rec.amount, Check::InsufficientRemain));
        if let Some(&(_, check)) = checks.iter().find(|(ok, _)| !ok) {
            return abort(graph, set, 2, i, check);
        }
        let channel = graph.channel_between(u, w).expect("path channel");
        graph.lock(channel, u, rec.amount)?;
        set.payments[i] = Some(PaymentContract {
            hop: i,
            channel,
            from: u,
            to: w,
            amount: rec.amount,
            timeout: rec.timeout,
            hashes: rec.hashes,
            formed_at: graph.clock(),
            state: ContractState::Active,
        });
        let id = set.contract_id("pay", i);
        set.emit(graph, channel, EventKind::Lock, u, rec.amount, id);
    }
    Ok(LockOutcome::Locked)
}

/// Both rounds; stops at the first abort.
pub fn lock_all(
    graph: &mut ChannelGraph,
    set: &mut ContractSet,
    ctx: &RunContext,
) -> Result<LockOutcome> {
    match lock_round1(graph, set, ctx)? {
        LockOutcome::Locked => lock_round2(graph, set, ctx),
        aborted => Ok(aborted),
    }
}
