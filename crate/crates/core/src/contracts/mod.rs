//! Executable HTLC, HTLC-GP and HTLC-GP-zeta contracts: pre-processing,
//! two-round locking, release and on-chain settlement.

mod envelope;
mod locking;
mod settle;

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::economics::{EconomicParams, Timing};
use crate::netmodel::{ChannelGraph, ChannelId, NodeId, PaymentPath};
use crate::penalty::PenaltyParams;
use crate::Result;

pub use envelope::{
    draw_blind, penalty_chain, preprocess, preprocess_with_blind, HopRecord, RoutingEnvelope,
};
pub use locking::{lock_all, lock_round1, lock_round2};
pub use settle::{release, unwind};

/// Which contract family a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Htlc,
    HtlcGp,
    HtlcGpZeta,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Htlc => "htlc",
            Protocol::HtlcGp => "htlc_gp",
            Protocol::HtlcGpZeta => "htlc_gp_zeta",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "htlc" => Ok(Protocol::Htlc),
            "htlc_gp" | "htlc-gp" => Ok(Protocol::HtlcGp),
            "htlc_gp_zeta" | "htlc-gp-zeta" => Ok(Protocol::HtlcGpZeta),
            _ => Err(format!("unknown protocol `{s}`")),
        }
    }
}

/// Penalty terms attached to a payment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PenaltyTerms {
    /// Plain HTLC.
    None,
    /// HTLC-GP with a per-block rate.
    Rate(f64),
    /// HTLC-GP-zeta.
    Guarantee(PenaltyParams),
}

impl PenaltyTerms {
    pub fn gamma(&self) -> f64 {
        match self {
            PenaltyTerms::None => 0.0,
            PenaltyTerms::Rate(g) => *g,
            PenaltyTerms::Guarantee(p) => p.gamma,
        }
    }

    pub fn guarantee(&self) -> Option<&PenaltyParams> {
        match self {
            PenaltyTerms::Guarantee(p) => Some(p),
            _ => None,
        }
    }

    pub fn protocol(&self) -> Protocol {
        match self {
            PenaltyTerms::None => Protocol::Htlc,
            PenaltyTerms::Rate(_) => Protocol::HtlcGp,
            PenaltyTerms::Guarantee(_) => Protocol::HtlcGpZeta,
        }
    }
}

/// SHA-256 of `data`.
pub fn digest(data: &[u8]) -> [u8; 32] {
    Sha256::digest(data).into()
}

/// Payment and cancellation digests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashPair {
    pub payment: [u8; 32],
    pub cancel: [u8; 32],
}

/// Preimages known only to the payee.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Secrets {
    pub x: [u8; 32],
    pub r: [u8; 32],
}

impl Secrets {
    pub fn generate<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let x: [u8; 32] = rng.gen();
        loop {
            let r: [u8; 32] = rng.gen();
            if r != x {
                return Self { x, r };
            }
        }
    }

    pub fn hashes(&self) -> HashPair {
        HashPair {
            payment: digest(&self.x),
            cancel: digest(&self.r),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContractState {
    Proposed,
    Active,
    ResolvedRelease,
    ResolvedTimeout,
}

/// Penalty `cgp` locked by `penalty_locker` on hop `hop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CancellationContract {
    pub hop: usize,
    pub channel: ChannelId,
    pub payer_side: NodeId,
    pub penalty_locker: NodeId,
    pub cgp: f64,
    pub cgp_sat: u64,
    pub timeout: u64,
    pub hashes: HashPair,
    pub formed_at: u64,
    pub state: ContractState,
}

/// Conditional payment of `amount` from `from` to `to` on hop `hop`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaymentContract {
    pub hop: usize,
    pub channel: ChannelId,
    pub from: NodeId,
    pub to: NodeId,
    pub amount: u64,
    pub timeout: u64,
    pub hashes: HashPair,
    pub formed_at: u64,
    pub state: ContractState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Lock,
    Release,
    Settle,
    Close,
}

/// One ledger line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEvent {
    pub block: u64,
    pub channel: String,
    pub kind: EventKind,
    pub party: String,
    pub amount_sat: u64,
    pub contract_id: String,
}

/// Named guard of the locking procedures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Check {
    PayeeTimeout,
    PayeeAmount,
    PenaltyCapExceeded,
    HashMismatch,
    InsufficientRemain,
    BeliefTooHigh,
    TimeoutOrder,
    PenaltyTelescoping,
    MinCompensationViolated,
    PayerTimeout,
    MissingCancellation,
    AmountRecursion,
}

impl Check {
    pub fn as_str(self) -> &'static str {
        match self {
            Check::PayeeTimeout => "PAYEE_TIMEOUT",
            Check::PayeeAmount => "PAYEE_AMOUNT",
            Check::PenaltyCapExceeded => "PENALTY_CAP_EXCEEDED",
            Check::HashMismatch => "HASH_MISMATCH",
            Check::InsufficientRemain => "INSUFFICIENT_REMAIN",
            Check::BeliefTooHigh => "BELIEF_TOO_HIGH",
            Check::TimeoutOrder => "TIMEOUT_ORDER",
            Check::PenaltyTelescoping => "PENALTY_TELESCOPING",
            Check::MinCompensationViolated => "MIN_COMPENSATION_VIOLATED",
            Check::PayerTimeout => "PAYER_TIMEOUT",
            Check::MissingCancellation => "MISSING_CANCELLATION",
            Check::AmountRecursion => "AMOUNT_RECURSION",
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where and why locking stopped. `node` is the index of the checking party.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Abort {
    pub round: u8,
    pub node: usize,
    pub check: Check,
}

/// Which guards honest parties evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CheckPolicy {
    /// Structural checks only; nodes always forward.
    Altruistic,
    /// Adds belief cutoffs and the minimum-compensation guard.
    Rational {
        /// Belief that the next hop is corrupt.
        theta: f64,
        /// Probability that a corrupt HTLC recipient waits rather than griefs.
        q: f64,
    },
}

/// Economic context of a protocol run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunContext {
    pub econ: EconomicParams,
    pub policy: CheckPolicy,
    /// Blocks the payee waits for the last payment contract.
    pub mu: u64,
}

impl Default for RunContext {
    fn default() -> Self {
        Self {
            econ: EconomicParams::default(),
            policy: CheckPolicy::Altruistic,
            mu: 1,
        }
    }
}

/// How the payee resolves a fully locked payment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PayeeAction {
    ReleaseX,
    ReleaseR,
    Grief,
    /// Cancel off-chain one block before the last timeout.
    WaitRejectAtDeadline,
    WaitAccept(u64),
    WaitReject(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunOutcome {
    Paid,
    Cancelled,
    Griefed,
    Aborted(Abort),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LockOutcome {
    Locked,
    Aborted(Abort),
}

/// All contracts of one payment plus its ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractSet {
    pub envelope: RoutingEnvelope,
    /// Indexed by hop; `None` until formed.
    pub cancellations: Vec<Option<CancellationContract>>,
    pub payments: Vec<Option<PaymentContract>>,
    pub events: Vec<LedgerEvent>,
    /// Block at which locking started.
    pub start: u64,
}

impl ContractSet {
    pub fn new(envelope: RoutingEnvelope, start: u64) -> Self {
        let kappa = envelope.path.kappa();
        Self {
            envelope,
            cancellations: vec![None; kappa],
            payments: vec![None; kappa],
            events: Vec::new(),
            start,
        }
    }

    pub fn path(&self) -> &PaymentPath {
        &self.envelope.path
    }

    pub fn protocol(&self) -> Protocol {
        self.envelope.terms.protocol()
    }

    /// Short identifier derived from the payment digest.
    pub fn id(&self) -> String {
        self.envelope.hashes.payment[..4]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn contract_id(&self, kind: &str, hop: usize) -> String {
        format!("{}/{kind}/{hop}", self.id())
    }

    fn emit(
        &mut self,
        graph: &ChannelGraph,
        channel: ChannelId,
        kind: EventKind,
        party: NodeId,
        amount: u64,
        contract_id: String,
    ) {
        self.events.push(LedgerEvent {
            block: graph.clock(),
            channel: graph.channel_label(channel),
            kind,
            party: graph.name(party).to_string(),
            amount_sat: amount,
            contract_id,
        });
    }

    /// Every payment contract is active.
    pub fn is_locked(&self) -> bool {
        self.payments
            .iter()
            .all(|p| matches!(p, Some(c) if c.state == ContractState::Active))
    }

    /// Payment collateral plus penalties currently locked by parties other
    /// than `exclude`.
    pub fn locked_by_others(&self, exclude: NodeId) -> u64 {
        let pay: u64 = self
            .payments
            .iter()
            .flatten()
            .filter(|c| c.state == ContractState::Active && c.from != exclude)
            .map(|c| c.amount)
            .sum();
        let pen: u64 = self
            .cancellations
            .iter()
            .flatten()
            .filter(|c| c.state == ContractState::Active && c.penalty_locker != exclude)
            .map(|c| c.cgp_sat)
            .sum();
        pay + pen
    }

    /// The ledger as JSON lines.
    pub fn ledger_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("ledger events serialise"));
            out.push('\n');
        }
        out
    }
}

/// Result of a complete run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub outcome: RunOutcome,
    pub contracts: ContractSet,
    pub secrets: Secrets,
}

fn run(
    graph: &mut ChannelGraph,
    path: &PaymentPath,
    terms: PenaltyTerms,
    timing: Timing,
    action: PayeeAction,
    ctx: &RunContext,
    rng: &mut (impl Rng + ?Sized),
) -> Result<RunReport> {
    let (envelope, secrets) = preprocess(path, terms, timing, rng)?;
    let mut set = ContractSet::new(envelope, graph.clock());
    let outcome = match lock_all(graph, &mut set, ctx)? {
        LockOutcome::Aborted(a) => RunOutcome::Aborted(a),
        LockOutcome::Locked => release(graph, &mut set, &secrets, action, ctx)?,
    };
    Ok(RunReport {
        outcome,
        contracts: set,
        secrets,
    })
}

/// Plain HTLC payment along `path`.
pub fn run_htlc(
    graph: &mut ChannelGraph,
    path: &PaymentPath,
    timing: Timing,
    action: PayeeAction,
    ctx: &RunContext,
    rng: &mut (impl Rng + ?Sized),
) -> Result<RunReport> {
    run(graph, path, PenaltyTerms::None, timing, action, ctx, rng)
}

/// HTLC-GP or HTLC-GP-zeta payment along `path`.
pub fn run_gp(
    graph: &mut ChannelGraph,
    path: &PaymentPath,
    terms: PenaltyTerms,
    timing: Timing,
    action: PayeeAction,
    ctx: &RunContext,
    rng: &mut (impl Rng + ?Sized),
) -> Result<RunReport> {
    run(graph, path, terms, timing, action, ctx, rng)
}

#[cfg(test)]
mod tests;
