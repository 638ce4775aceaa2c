#![allow(dead_code)]

use griefsim::contracts::{
    run_gp, run_htlc, CheckPolicy, PayeeAction, PenaltyTerms, RunContext, RunOutcome,
};
use griefsim::netmodel::{BalanceMode, EdgeRecord};
use griefsim::penalty::PenaltyParams;
use griefsim::{ChannelGraph, EconomicParams, NodeId, PaymentPath, Timing};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const ACTIONS: [PayeeAction; 4] = [
    PayeeAction::ReleaseX,
    PayeeAction::ReleaseR,
    PayeeAction::Grief,
    PayeeAction::WaitRejectAtDeadline,
];

#[derive(Debug, Clone)]
pub enum Terms {
    Htlc,
    Rate(f64),
    Guarantee {
        k: f64,
        zeta: f64,
    },
    /// Hand-picked rate and floor under rational checks.
    RationalFloor {
        gamma: f64,
        zeta: f64,
    },
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub caps: Vec<u64>,
    pub amount: u64,
    pub terms: Terms,
    pub fees: bool,
    pub seed: u64,
}

pub fn line(caps: &[u64]) -> (ChannelGraph, Vec<NodeId>) {
    let names: Vec<String> = (0..=caps.len()).map(|i| format!("u{i}")).collect();
    let recs: Vec<EdgeRecord> = caps
        .iter()
        .enumerate()
        .map(|(i, &c)| EdgeRecord {
            src: names[i].clone(),
            dst: names[i + 1].clone(),
            capacity_sat: c,
            opened_at: None,
            lifetime: None,
        })
        .collect();
    let g = ChannelGraph::from_records(&recs, BalanceMode::Split).expect("valid line");
    let hops = names.iter().map(|n| g.node(n).expect("present")).collect();
    (g, hops)
}

fn terms_strategy(kappa: usize) -> BoxedStrategy<Terms> {
    let grid: Vec<(f64, f64)> = griefsim::experiments::GUARANTEE_GRID
        .iter()
        .copied()
        .filter(|&(k, z)| griefsim::penalty::max_path_length(k, z).unwrap() >= kappa)
        .collect();
    prop_oneof![
        Just(Terms::Htlc),
        (0.0f64..1e-3).prop_map(Terms::Rate),
        proptest::sample::select(grid).prop_map(|(k, zeta)| Terms::Guarantee { k, zeta }),
        (1e-6f64..1e-4, 1e-4f64..1e-2)
            .prop_map(|(gamma, zeta)| Terms::RationalFloor { gamma, zeta }),
    ]
    .boxed()
}

pub fn scenario() -> impl Strategy<Value = Scenario> {
    (1usize..=10, 1_000u64..200_000).prop_flat_map(|(kappa, amount)| {
        (
            proptest::collection::vec(amount / 2..amount * 40, kappa),
            Just(amount),
            terms_strategy(kappa),
            any::<bool>(),
            any::<u64>(),
        )
            .prop_map(|(caps, amount, terms, fees, seed)| Scenario {
                caps,
                amount,
                terms,
                fees,
                seed,
            })
    })
}

/// Runs `s` once under `action` on a fresh line and checks every invariant.
pub fn check(s: &Scenario, action: PayeeAction) -> Result<(), String> {
    let timing = Timing::default();
    let econ = if s.fees {
        EconomicParams::default()
    } else {
        EconomicParams::default().without_fees()
    };
    let (mut g, hops) = line(&s.caps);
    let kappa = s.caps.len();
    let path = PaymentPath::with_schedule(hops.clone(), s.amount, &econ, timing);
    let (terms, policy) = match s.terms {
        Terms::Htlc => (PenaltyTerms::None, CheckPolicy::Altruistic),
        Terms::Rate(g) => (PenaltyTerms::Rate(g), CheckPolicy::Altruistic),
        Terms::Guarantee { k, zeta } => (
            PenaltyTerms::Guarantee(
                PenaltyParams::from_guarantee(k, zeta, timing).map_err(|e| e.to_string())?,
            ),
            CheckPolicy::Altruistic,
        ),
        Terms::RationalFloor { gamma, zeta } => (
            PenaltyTerms::Guarantee(PenaltyParams {
                gamma,
                zeta,
                k: 1e9,
                max_len: 20,
            }),
            CheckPolicy::Rational { theta: 0.0, q: 0.7 },
        ),
    };
    // Belief checks need a positive fee.
    let econ = if matches!(policy, CheckPolicy::Rational { .. }) {
        EconomicParams::default()
    } else {
        econ
    };
    let path = if matches!(policy, CheckPolicy::Rational { .. }) {
        PaymentPath::with_schedule(hops.clone(), s.amount, &econ, timing)
    } else {
        path
    };
    let ctx = RunContext {
        econ,
        policy,
        mu: 1,
    };
    let total = g.total_funds();
    let before: Vec<i128> = hops.iter().map(|&h| g.balance(h)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let report = match terms {
        PenaltyTerms::None => run_htlc(&mut g, &path, timing, action, &ctx, &mut rng),
        _ => run_gp(&mut g, &path, terms, timing, action, &ctx, &mut rng),
    }
    .map_err(|e| format!("run failed: {e}"))?;
    let after: Vec<i128> = hops.iter().map(|&h| g.balance(h)).collect();
    let delta: Vec<i128> = after.iter().zip(&before).map(|(a, b)| a - b).collect();

    if g.total_funds() != total || !g.is_conserved() {
        return Err("channel funds not conserved".into());
    }
    let held: i128 = after.iter().sum::<i128>() + g.total_fees_paid() as i128;
    let in_flight: u128 = g.channels().iter().map(|c| c.in_flight() as u128).sum();
    if held + in_flight as i128 != total as i128 {
        return Err("balances + in-flight + fees differ from initial funds".into());
    }
    if in_flight != 0 {
        return Err("funds left in flight after resolution".into());
    }

    let m = econ.mining_fee as i128;
    let set = &report.contracts;
    match report.outcome {
        RunOutcome::Aborted(_) | RunOutcome::Cancelled => {
            if delta.iter().any(|&d| d != 0) {
                return Err(format!("{:?} moved funds: {delta:?}", report.outcome));
            }
        }
        RunOutcome::Paid => {
            let a = &path.amounts;
            let mut expect = vec![0i128; kappa + 1];
            for i in 0..kappa {
                expect[i] -= a[i] as i128;
                expect[i + 1] += a[i] as i128;
            }
            if delta != expect {
                return Err(format!("payment deltas {delta:?}, expected {expect:?}"));
            }
        }
        RunOutcome::Griefed => {
            let cgp: Vec<i128> = (0..kappa)
                .map(|i| {
                    set.cancellations[i]
                        .as_ref()
                        .map_or(0, |c| c.cgp_sat as i128)
                })
                .collect();
            let mut expect = vec![0i128; kappa + 1];
            for i in 0..kappa {
                expect[i] += cgp[i] - m;
                if i > 0 {
                    expect[i] -= cgp[i - 1];
                }
            }
            expect[kappa] -= cgp[kappa - 1];
            if delta != expect {
                return Err(format!("grief deltas {delta:?}, expected {expect:?}"));
            }
        }
    }
    if action == PayeeAction::WaitRejectAtDeadline
        && !matches!(report.outcome, RunOutcome::Aborted(_))
    {
        if report.outcome != RunOutcome::Cancelled {
            return Err("wait-and-reject did not cancel".into());
        }
        if g.clock() + 1 != path.timeouts[kappa - 1] {
            return Err(format!("wait-and-reject resolved at block {}", g.clock()));
        }
    }
    if action == PayeeAction::Grief && !matches!(report.outcome, RunOutcome::Aborted(_)) {
        if report.outcome != RunOutcome::Griefed {
            return Err("grief did not settle on chain".into());
        }
    }

    if let (CheckPolicy::Rational { .. }, Some(p)) = (policy, terms.guarantee()) {
        for (i, c) in set.cancellations.iter().enumerate() {
            let Some(c) = c else { continue };
            let a = path.amounts[i] as f64;
            let ok = if i == 0 {
                c.cgp >= p.zeta * a * (1.0 - 1e-12)
            } else {
                p.gamma * a * c.timeout as f64 >= p.zeta * a * (1.0 - 1e-12)
            };
            if !ok {
                return Err(format!("hop {i} accepted below the compensation floor"));
            }
        }
    }
    Ok(())
}

/// Runs `s` under every payee action.
pub fn check_all(s: &Scenario) -> Result<(), String> {
    for a in ACTIONS {
        check(s, a).map_err(|e| format!("{a:?}: {e}"))?;
    }
    Ok(())
}

/// `sum_{x<=cap} x * P(X = x)` with each probability evaluated directly
/// from the Poisson mass function.
pub fn truncated_mean_oracle(lambda: f64, cap: u64) -> f64 {
    use statrs::distribution::{Discrete, Poisson};
    if lambda <= 0.0 {
        return 0.0;
    }
    let d = Poisson::new(lambda).expect("positive rate");
    (0..=cap).map(|x| x as f64 * d.pmf(x)).sum()
}
