use super::{
    digest, ContractSet, ContractState, EventKind, PayeeAction, RunContext, RunOutcome, Secrets,
};
use crate::error::{Error, Result};
use crate::netmodel::{ChannelGraph, ReleaseTo};

/// Returns every active lock to its owner off-chain.
pub fn unwind(graph: &mut ChannelGraph, set: &mut ContractSet) -> Result<()> {
    for i in (0..set.payments.len()).rev() {
        let Some(c) = set.payments[i].clone() else {
            continue;
        };
        if c.state != ContractState::Active {
            continue;
        }
        graph.release(c.channel, c.from, c.amount, ReleaseTo::Locker)?;
        set.payments[i].as_mut().expect("present").state = ContractState::ResolvedRelease;
        let id = set.contract_id("pay", i);
        set.emit(graph, c.channel, EventKind::Release, c.from, c.amount, id);
    }
    for i in (0..set.cancellations.len()).rev() {
        let Some(c) = set.cancellations[i].clone() else {
            continue;
        };
        if c.state != ContractState::Active {
            continue;
        }
        graph.release(c.channel, c.penalty_locker, c.cgp_sat, ReleaseTo::Locker)?;
        set.cancellations[i].as_mut().expect("present").state = ContractState::ResolvedRelease;
        let id = set.contract_id("cancel", i);
        set.emit(
            graph,
            c.channel,
            EventKind::Release,
            c.penalty_locker,
            c.cgp_sat,
            id,
        );
    }
    Ok(())
}

fn ensure_locked(set: &ContractSet) -> Result<()> {
    for (i, p) in set.payments.iter().enumerate() {
        match p {
            Some(c) if c.state == ContractState::Active => {}
            Some(_) => return Err(Error::AlreadyResolved(set.contract_id("pay", i))),
            None => {
                return Err(Error::InconsistentAction(format!(
                    "hop {i} has no payment contract"
                )))
            }
        }
    }
    Ok(())
}

/// Backward off-chain resolution with preimage `z`: payments settle when `z`
/// opens the payment digest and refund when it opens the cancellation digest.
/// Penalties return to their lockers either way.
fn resolve_offchain(
    graph: &mut ChannelGraph,
    set: &mut ContractSet,
    z: &[u8; 32],
) -> Result<RunOutcome> {
    let h = digest(z);
    let kappa = set.payments.len();
    for i in (0..kappa).rev() {
        let c = set.payments[i].clone().expect("locked");
        let pays = if h == c.hashes.payment {
            true
        } else if h == c.hashes.cancel {
            false
        } else {
            return Err(Error::PreimageMismatch(set.contract_id("pay", i)));
        };
        let (to, kind, party) = if pays {
            (ReleaseTo::Counterparty, EventKind::Settle, c.to)
        } else {
            (ReleaseTo::Locker, EventKind::Release, c.from)
        };
        graph.release(c.channel, c.from, c.amount, to)?;
        set.payments[i].as_mut().expect("present").state = ContractState::ResolvedRelease;
        let id = set.contract_id("pay", i);
        set.emit(graph, c.channel, kind, party, c.amount, id);
        if let Some(cc) = set.cancellations[i].clone() {
            if cc.state != ContractState::Active {
                return Err(Error::AlreadyResolved(set.contract_id("cancel", i)));
            }
            graph.release(cc.channel, cc.penalty_locker, cc.cgp_sat, ReleaseTo::Locker)?;
            set.cancellations[i].as_mut().expect("present").state = ContractState::ResolvedRelease;
            let id = set.contract_id("cancel", i);
            set.emit(
                graph,
                cc.channel,
                EventKind::Release,
                cc.penalty_locker,
                cc.cgp_sat,
                id,
            );
        }
    }
    Ok(if h == set.envelope.hashes.payment {
        RunOutcome::Paid
    } else {
        RunOutcome::Cancelled
    })
}

/// Payee withholds both preimages. Each victim waits out its timeout, takes
/// back its payment collateral, claims the penalty locked against it and
/// closes the channel on-chain.
fn grief(graph: &mut ChannelGraph, set: &mut ContractSet, mining_fee: u64) -> Result<RunOutcome> {
    let kappa = set.payments.len();
    for i in (0..kappa).rev() {
        let c = set.payments[i].clone().expect("locked");
        let due = c.formed_at + c.timeout;
        graph.advance_to(due.max(graph.clock()))?;
        if graph.clock() < due {
            return Err(Error::InconsistentAction(format!(
                "timeout claim before block {due}"
            )));
        }
        graph.release(c.channel, c.from, c.amount, ReleaseTo::Locker)?;
        set.payments[i].as_mut().expect("present").state = ContractState::ResolvedTimeout;
        let id = set.contract_id("pay", i);
        set.emit(graph, c.channel, EventKind::Settle, c.from, c.amount, id);
        if let Some(cc) = set.cancellations[i].clone() {
            if cc.state != ContractState::Active {
                return Err(Error::AlreadyResolved(set.contract_id("cancel", i)));
            }
            graph.release(
                cc.channel,
                cc.penalty_locker,
                cc.cgp_sat,
                ReleaseTo::Counterparty,
            )?;
            set.cancellations[i].as_mut().expect("present").state = ContractState::ResolvedTimeout;
            let id = set.contract_id("cancel", i);
            set.emit(
                graph,
                cc.channel,
                EventKind::Settle,
                cc.payer_side,
                cc.cgp_sat,
                id,
            );
        }
        graph.close(c.channel, c.from, mining_fee)?;
        let id = set.contract_id("pay", i);
        set.emit(graph, c.channel, EventKind::Close, c.from, mining_fee, id);
    }
    Ok(RunOutcome::Griefed)
}

/// Release phase for a fully locked payment.
pub fn release(
    graph: &mut ChannelGraph,
    set: &mut ContractSet,
    secrets: &Secrets,
    action: PayeeAction,
    ctx: &RunContext,
) -> Result<RunOutcome> {
    ensure_locked(set)?;
    let last = set.payments.len() - 1;
    let last_timeout = set.payments[last].as_ref().expect("locked").timeout;
    let delivered = set.payments[last].as_ref().expect("locked").formed_at;
    let wait = |t: u64| -> Result<u64> {
        if t == 0 || t >= last_timeout {
            return Err(Error::InconsistentAction(format!(
                "wait of {t} blocks outside [1, {}]",
                last_timeout - 1
            )));
        }
        Ok(t)
    };
    let (delay, preimage) = match action {
        PayeeAction::Grief => return grief(graph, set, ctx.econ.mining_fee),
        PayeeAction::ReleaseX if delivered <= set.start + ctx.mu => (0, secrets.x),
        PayeeAction::ReleaseX | PayeeAction::ReleaseR => (0, secrets.r),
        PayeeAction::WaitRejectAtDeadline => (wait(last_timeout - 1)?, secrets.r),
        PayeeAction::WaitAccept(t) => (wait(t)?, secrets.x),
        PayeeAction::WaitReject(t) => (wait(t)?, secrets.r),
    };
    graph.advance_to((set.start + delay).max(graph.clock()))?;
    resolve_offchain(graph, set, &preimage)
}
