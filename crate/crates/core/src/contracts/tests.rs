use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::netmodel::{BalanceMode, EdgeRecord};
use crate::penalty::PenaltyParams;
use crate::Error;

fn line(n: usize, cap: u64) -> (ChannelGraph, PaymentPath) {
    let names: Vec<String> = (0..=n).map(|i| format!("u{i}")).collect();
    let recs: Vec<EdgeRecord> = names
        .windows(2)
        .map(|w| EdgeRecord {
            src: w[0].clone(),
            dst: w[1].clone(),
            capacity_sat: cap,
            opened_at: None,
            lifetime: None,
        })
        .collect();
    let g = ChannelGraph::from_records(&recs, BalanceMode::Split).unwrap();
    let hops = names.iter().map(|s| g.node(s).unwrap()).collect();
    let path = PaymentPath::with_schedule(
        hops,
        10_000,
        &EconomicParams::default().without_fees(),
        Timing::default(),
    );
    (g, path)
}

fn ctx() -> RunContext {
    RunContext {
        econ: EconomicParams::default().without_fees(),
        ..Default::default()
    }
}

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(7)
}

#[test]
fn secrets_distinct_and_hash() {
    let s = Secrets::generate(&mut rng());
    assert_ne!(s.x, s.r);
    let h = s.hashes();
    assert_ne!(h.payment, h.cancel);
    assert_eq!(h.payment, digest(&s.x));
}

#[test]
fn blind_forced_and_psi_clamped() {
    let (_, path) = line(2, 1_000_000);
    let p = PenaltyParams {
        gamma: 1e-4,
        zeta: 0.01,
        k: 0.02,
        max_len: 2,
    };
    let (env, _) = preprocess(
        &path,
        PenaltyTerms::Guarantee(p),
        Timing::default(),
        &mut rng(),
    )
    .unwrap();
    assert_eq!(env.blind, Some(2));
    assert_eq!(env.psi, 0.0);
    let (cgp, psi) = penalty_chain(&[10_000, 10_000], &[200, 100], 1e-4, Some(5), 100);
    assert!((psi - 10_000.0).abs() < 1e-9);
    assert!((cgp[1] - 1e-4 * 5.0 * 10_000.0 * 100.0).abs() < 1e-9);
}

#[test]
fn cgp_uniform_closed_form() {
    let (_, path) = line(4, 1_000_000);
    let (env, _) = preprocess(
        &path,
        PenaltyTerms::Rate(1e-5),
        Timing::default(),
        &mut rng(),
    )
    .unwrap();
    let expect = 1e-5 * 10_000.0 * (4.0 * 100.0 + 4.0 * 3.0 * 100.0 / 2.0);
    assert!((env.records[3].cgp - expect).abs() < 1e-9);
    let (env, _) = preprocess(
        &path,
        PenaltyTerms::Rate(0.0),
        Timing::default(),
        &mut rng(),
    )
    .unwrap();
    assert!(env.records.iter().all(|r| r.cgp == 0.0));
}

#[test]
fn cap_exceeded_rejected() {
    let (_, path) = line(3, 1_000_000);
    let p = PenaltyParams {
        gamma: 1e-4,
        zeta: 0.01,
        k: 0.02,
        max_len: 2,
    };
    assert!(preprocess(
        &path,
        PenaltyTerms::Guarantee(p),
        Timing::default(),
        &mut rng()
    )
    .is_err());
}

#[test]
fn three_hop_gp_locks_and_pays() {
    let (mut g, path) = line(3, 1_000_000);
    let before: Vec<i128> = path.hops.iter().map(|&h| g.balance(h)).collect();
    let (env, secrets) = preprocess(
        &path,
        PenaltyTerms::Rate(1e-5),
        Timing::default(),
        &mut rng(),
    )
    .unwrap();
    let cgp: Vec<u64> = env.records.iter().map(|r| economics_round(r.cgp)).collect();
    let mut set = ContractSet::new(env, g.clock());
    assert_eq!(
        lock_round1(&mut g, &mut set, &ctx()).unwrap(),
        LockOutcome::Locked
    );
    for i in 0..3 {
        assert_eq!(g.remain(path.hops[i + 1], path.hops[i]), 500_000 - cgp[i]);
    }
    assert_eq!(
        lock_round2(&mut g, &mut set, &ctx()).unwrap(),
        LockOutcome::Locked
    );
    assert_eq!(
        release(&mut g, &mut set, &secrets, PayeeAction::ReleaseX, &ctx()).unwrap(),
        RunOutcome::Paid
    );
    let after: Vec<i128> = path.hops.iter().map(|&h| g.balance(h)).collect();
    assert_eq!(after[0] - before[0], -10_000);
    assert_eq!(after[3] - before[3], 10_000);
    assert_eq!(after[1], before[1]);
    assert!(g.is_conserved());
    assert!(matches!(
        release(&mut g, &mut set, &secrets, PayeeAction::ReleaseX, &ctx()),
        Err(Error::AlreadyResolved(_))
    ));
}

fn economics_round(x: f64) -> u64 {
    crate::economics::round_half_up(x)
}

#[test]
fn release_r_restores_everything() {
    let (mut g, path) = line(3, 1_000_000);
    let before: Vec<i128> = g.nodes().map(|h| g.balance(h)).collect();
    let r = run_gp(
        &mut g,
        &path,
        PenaltyTerms::Rate(1e-5),
        Timing::default(),
        PayeeAction::ReleaseR,
        &ctx(),
        &mut rng(),
    )
    .unwrap();
    assert_eq!(r.outcome, RunOutcome::Cancelled);
    let after: Vec<i128> = g.nodes().map(|h| g.balance(h)).collect();
    assert_eq!(before, after);
}

#[test]
fn grief_compensates_victims() {
    let (mut g, path) = line(3, 1_000_000);
    let before: Vec<i128> = path.hops.iter().map(|&h| g.balance(h)).collect();
    let r = run_gp(
        &mut g,
        &path,
        PenaltyTerms::Rate(1e-5),
        Timing::default(),
        PayeeAction::Grief,
        &ctx(),
        &mut rng(),
    )
    .unwrap();
    assert_eq!(r.outcome, RunOutcome::Griefed);
    let cgp: Vec<i128> = r
        .contracts
        .cancellations
        .iter()
        .map(|c| c.as_ref().unwrap().cgp_sat as i128)
        .collect();
    let after: Vec<i128> = path.hops.iter().map(|&h| g.balance(h)).collect();
    let m = 154;
    assert_eq!(after[0] - before[0], cgp[0] - m);
    assert_eq!(after[1] - before[1], cgp[1] - cgp[0] - m);
    assert_eq!(after[2] - before[2], cgp[2] - cgp[1] - m);
    assert_eq!(after[3] - before[3], -cgp[2]);
    assert!(g.channels().iter().all(|c| !c.is_open()));
    assert_eq!(g.clock(), 300);
}

#[test]
fn wait_reject_pays_no_penalty() {
    let (mut g, path) = line(3, 1_000_000);
    let before: Vec<i128> = g.nodes().map(|h| g.balance(h)).collect();
    let r = run_gp(
        &mut g,
        &path,
        PenaltyTerms::Rate(1e-5),
        Timing::default(),
        PayeeAction::WaitRejectAtDeadline,
        &ctx(),
        &mut rng(),
    )
    .unwrap();
    assert_eq!(r.outcome, RunOutcome::Cancelled);
    assert_eq!(g.clock(), 99);
    let after: Vec<i128> = g.nodes().map(|h| g.balance(h)).collect();
    assert_eq!(before, after);
}

#[test]
fn htlc_paths() {
    let econ = EconomicParams::default();
    let c = RunContext {
        econ,
        ..Default::default()
    };
    let (mut g, p) = line(3, 1_000_000);
    let path = PaymentPath::with_schedule(p.hops.clone(), 10_000, &econ, Timing::default());
    let before: Vec<i128> = path.hops.iter().map(|&h| g.balance(h)).collect();
    let r = run_htlc(
        &mut g,
        &path,
        Timing::default(),
        PayeeAction::ReleaseX,
        &c,
        &mut rng(),
    )
    .unwrap();
    assert_eq!(r.outcome, RunOutcome::Paid);
    let after: Vec<i128> = path.hops.iter().map(|&h| g.balance(h)).collect();
    assert_eq!(after[3] - before[3], 10_000);
    assert_eq!(after[2] - before[2], econ.fee_sat(10_000) as i128);
    assert_eq!(
        r.contracts
            .events
            .iter()
            .filter(|e| e.kind == EventKind::Lock)
            .count(),
        3
    );

    let (mut g, _) = line(3, 1_000_000);
    let r = run_htlc(
        &mut g,
        &path,
        Timing::default(),
        PayeeAction::Grief,
        &c,
        &mut rng(),
    )
    .unwrap();
    assert_eq!(r.outcome, RunOutcome::Griefed);
    assert_eq!(g.total_fees_paid(), 3 * 154);
}

#[test]
fn rational_guards() {
    let (mut g, path) = line(3, 1_000_000);
    let p = PenaltyParams::from_guarantee(0.25, 0.025, Timing::default()).unwrap();
    let c = RunContext {
        econ: EconomicParams::default(),
        policy: CheckPolicy::Rational { theta: 0.0, q: 0.7 },
        mu: 1,
    };
    let r = run_gp(
        &mut g,
        &path,
        PenaltyTerms::Guarantee(p),
        Timing::default(),
        PayeeAction::ReleaseX,
        &c,
        &mut rng(),
    )
    .unwrap();
    assert_eq!(
        r.outcome,
        RunOutcome::Aborted(Abort {
            round: 1,
            node: 2,
            check: Check::MinCompensationViolated
        })
    );
    assert_eq!(g.total_funds(), 3 * 1_000_000);
    assert!(g.channels().iter().all(|c| c.in_flight() == 0));

    let c = RunContext {
        econ: EconomicParams::default(),
        policy: CheckPolicy::Rational {
            theta: 0.05,
            q: 0.7,
        },
        mu: 1,
    };
    let r = run_htlc(
        &mut g,
        &path,
        Timing::default(),
        PayeeAction::ReleaseX,
        &c,
        &mut rng(),
    )
    .unwrap();
    assert!(matches!(
        r.outcome,
        RunOutcome::Aborted(Abort {
            check: Check::BeliefTooHigh,
            ..
        })
    ));
}

#[test]
fn tampered_records_abort() {
    let (mut g, path) = line(3, 1_000_000);
    let (mut env, _) = preprocess(
        &path,
        PenaltyTerms::Rate(1e-5),
        Timing::default(),
        &mut rng(),
    )
    .unwrap();
    env.records[1].cgp += 1.0;
    let mut set = ContractSet::new(env, 0);
    let out = lock_all(&mut g, &mut set, &ctx()).unwrap();
    assert_eq!(
        out,
        LockOutcome::Aborted(Abort {
            round: 1,
            node: 2,
            check: Check::PenaltyTelescoping
        })
    );
    assert!(g.channels().iter().all(|c| c.in_flight() == 0));

    let (mut env, _) =
        preprocess(&path, PenaltyTerms::None, Timing::default(), &mut rng()).unwrap();
    env.records[2].amount += 5;
    let mut set = ContractSet::new(env, 0);
    let out = lock_all(&mut g, &mut set, &ctx()).unwrap();
    assert!(matches!(
        out,
        LockOutcome::Aborted(Abort {
            round: 2,
            node: 2,
            check: Check::AmountRecursion
        })
    ));
}

#[test]
fn ledger_lines_are_json() {
    let (mut g, path) = line(2, 1_000_000);
    let r = run_gp(
        &mut g,
        &path,
        PenaltyTerms::Rate(1e-5),
        Timing::default(),
        PayeeAction::ReleaseX,
        &ctx(),
        &mut rng(),
    )
    .unwrap();
    let text = r.contracts.ledger_jsonl();
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["kind"], "lock");
    assert_eq!(first["channel"], "u1-u2");
}
