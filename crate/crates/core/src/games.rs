//! Two-player forwarding games between `U_{i-1}` (first mover) and `U_i`.
//!
//! The game is played on the last hop of a `kappa`-hop route, so the upstream
//! contract timeout is `D`. A corrupt second mover is the attacker's
//! recipient of an `n`-hop self-payment.

use serde::{Deserialize, Serialize};

use crate::economics::{hop_amounts_real, EconomicParams, TimeoutSchedule, Timing};
use crate::error::{invalid, Error, Result};
use crate::penalty::{attack_payment_value, cumulative_penalty};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameProtocol {
    Htlc,
    HtlcGp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Nature {
    Corrupt,
    Uncorrupt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FirstAction {
    #[serde(rename = "F")]
    Forward,
    #[serde(rename = "NF")]
    NotForward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SecondAction {
    Accept,
    Reject,
    WaitAccept(u64),
    WaitReject(u64),
    Grief,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffPair {
    pub first: f64,
    pub second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    pub protocol: GameProtocol,
    /// Amount forwarded on the game hop.
    pub alpha: f64,
    /// Maximum path length, used for the attacker's self-payment.
    pub n: usize,
    /// Length of the route the game hop belongs to.
    pub kappa: usize,
    pub timing: Timing,
    pub theta: f64,
    /// Probability that a corrupt recipient waits and rejects rather than griefs.
    pub q: f64,
    pub econ: EconomicParams,
    pub remain_fwd: f64,
    pub remain_bwd: f64,
    /// Blocks of channel lifetime left once the contract expires.
    pub t_tilde: f64,
    pub setup_cost: f64,
    pub gamma: f64,
}

impl Default for GameSpec {
    fn default() -> Self {
        Self {
            protocol: GameProtocol::Htlc,
            alpha: 15000.0,
            n: 20,
            kappa: 20,
            timing: Timing::default(),
            theta: 0.0,
            q: 0.7,
            econ: EconomicParams::default(),
            remain_fwd: 0.0,
            remain_bwd: 0.0,
            t_tilde: 1_000_000.0,
            setup_cost: 0.0,
            gamma: 1e-5,
        }
    }
}

impl GameSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(invalid("theta", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(invalid("q", "must lie in [0, 1]"));
        }
        if self.kappa == 0 || self.kappa > self.n {
            return Err(invalid("kappa", "must satisfy 1 <= kappa <= n"));
        }
        if !(self.gamma >= 0.0) {
            return Err(invalid("gamma", "must be non-negative"));
        }
        if self.timing.d < 2 {
            return Err(invalid("D", "must be at least two blocks"));
        }
        self.econ.validate()
    }

    fn d(&self) -> f64 {
        self.timing.d as f64
    }

    fn o(&self, t: f64, val: f64) -> f64 {
        self.econ.opportunity_cost(t, val)
    }

    fn fee(&self) -> f64 {
        self.econ.fee(self.alpha)
    }

    fn attack_schedule(&self) -> Vec<u64> {
        TimeoutSchedule::new(self.n, self.timing)
            .expect("validated n")
            .timeouts
    }

    /// Value the corrupt recipient routes to itself.
    pub fn attack_value(&self) -> f64 {
        match self.protocol {
            GameProtocol::Htlc => self.alpha,
            GameProtocol::HtlcGp => {
                attack_payment_value(self.alpha, self.gamma, &self.attack_schedule())
            }
        }
    }

    /// Fees the attacker pays its intermediaries on the self-payment.
    fn attack_fees(&self) -> f64 {
        let amounts = hop_amounts_real(self.attack_value(), self.n, &self.econ);
        amounts.iter().skip(1).map(|&a| self.econ.fee(a)).sum()
    }

    /// Cumulative penalty the corrupt recipient locks for its self-payment.
    pub fn attack_penalty(&self) -> f64 {
        let amounts = hop_amounts_real(self.attack_value(), self.n, &self.econ);
        cumulative_penalty(&amounts, &self.attack_schedule(), self.gamma, self.n)
    }

    /// Cumulative penalty an honest recipient locks for the game hop.
    pub fn honest_penalty(&self) -> f64 {
        let schedule = TimeoutSchedule::new(self.kappa, self.timing).expect("validated kappa");
        let amounts = hop_amounts_real(self.alpha, self.kappa, &self.econ);
        cumulative_penalty(&amounts, &schedule.timeouts, self.gamma, self.kappa)
    }

    fn bribe(&self) -> f64 {
        self.econ.bribe(self.alpha, self.setup_cost, self.timing.d)
    }
}

/// Net profit of a corrupt recipient that keeps the forwarded coins idle for
/// `t` blocks. Jumps to include the bribe once `t` reaches `D - 1`.
pub fn eta(spec: &GameSpec, t: u64) -> Result<f64> {
    if t == 0 || t > spec.timing.d {
        return Err(invalid("t", format!("must lie in [1, {}]", spec.timing.d)));
    }
    let c = spec.setup_cost;
    Ok(if t + 1 < spec.timing.d {
        -c - spec.o(t as f64, spec.alpha)
    } else {
        spec.bribe() - c - spec.o(spec.d(), spec.alpha)
    })
}

fn wait_bound(spec: &GameSpec, t: u64) -> Result<()> {
    if t == 0 || t >= spec.timing.d {
        return Err(Error::InconsistentAction(format!(
            "wait time {t} outside [1, {}]",
            spec.timing.d - 1
        )));
    }
    Ok(())
}

/// Payoffs of both players for an action profile.
pub fn payoff(
    spec: &GameSpec,
    nature: Nature,
    a1: FirstAction,
    a2: Option<SecondAction>,
) -> Result<PayoffPair> {
    let a2 = match (a1, a2) {
        (FirstAction::NotForward, None) => {
            return Ok(PayoffPair {
                first: 0.0,
                second: 0.0,
            })
        }
        (FirstAction::Forward, Some(a)) => a,
        (FirstAction::NotForward, Some(_)) => {
            return Err(Error::InconsistentAction("second move after NF".into()))
        }
        (FirstAction::Forward, None) => {
            return Err(Error::InconsistentAction("F requires a second move".into()))
        }
    };
    if let SecondAction::WaitAccept(t) | SecondAction::WaitReject(t) = a2 {
        wait_bound(spec, t)?;
    }
    let gp = spec.protocol == GameProtocol::HtlcGp;
    let m = spec.econ.mining_fee as f64;
    let d = spec.d();
    let rem_fwd = spec.o(spec.t_tilde, spec.remain_fwd);
    let rem_bwd = spec.o(spec.t_tilde, spec.remain_bwd);
    let pair = |first, second| PayoffPair { first, second };
    Ok(match nature {
        Nature::Uncorrupt => {
            let a = spec.alpha;
            let f = spec.fee();
            let z = if gp { spec.honest_penalty() } else { 0.0 };
            match a2 {
                SecondAction::Accept => pair(f, a),
                SecondAction::Reject => pair(0.0, 0.0),
                SecondAction::WaitAccept(t) => {
                    let o = spec.o(t as f64, a);
                    let oz = if gp { spec.o(t as f64, z) } else { 0.0 };
                    pair(f - o, a - o - oz)
                }
                SecondAction::WaitReject(t) => {
                    let o = spec.o(t as f64, a);
                    let oz = if gp { spec.o(t as f64, z) } else { 0.0 };
                    pair(-o, -o - oz)
                }
                SecondAction::Grief => {
                    let o = spec.o(d, a);
                    if gp {
                        pair(-(o + rem_fwd + m) + z, -rem_bwd - o - spec.o(d, z) - z)
                    } else {
                        pair(-o - rem_fwd - m, -rem_bwd - o)
                    }
                }
            }
        }
        Nature::Corrupt => {
            let v = spec.attack_value();
            let f = spec.econ.fee(v);
            let fees = spec.attack_fees();
            let c = spec.setup_cost;
            match a2 {
                SecondAction::Accept => pair(f, -c - fees),
                SecondAction::Reject => pair(0.0, -c),
                SecondAction::WaitAccept(t) => pair(f - spec.o(t as f64, v), -fees + eta(spec, t)?),
                SecondAction::WaitReject(t) => pair(-spec.o(t as f64, v), eta(spec, t)?),
                SecondAction::Grief => {
                    let first = -spec.o(d, v) - rem_fwd - m;
                    let second = eta(spec, spec.timing.d)?;
                    if gp {
                        let z = spec.attack_penalty();
                        pair(first + z, second - z - rem_bwd)
                    } else {
                        pair(first, second)
                    }
                }
            }
        }
    })
}

/// Every second-mover action on the block grid.
pub fn second_actions(spec: &GameSpec) -> Vec<SecondAction> {
    let mut out = vec![
        SecondAction::Accept,
        SecondAction::Reject,
        SecondAction::Grief,
    ];
    for t in 1..spec.timing.d {
        out.push(SecondAction::WaitAccept(t));
        out.push(SecondAction::WaitReject(t));
    }
    out
}

/// All maximisers of the second mover's payoff after `F`.
pub fn best_response(spec: &GameSpec, nature: Nature) -> Result<Vec<SecondAction>> {
    spec.validate()?;
    let scored: Vec<(SecondAction, f64)> = second_actions(spec)
        .into_iter()
        .map(|a| payoff(spec, nature, FirstAction::Forward, Some(a)).map(|p| (a, p.second)))
        .collect::<Result<_>>()?;
    let best = scored
        .iter()
        .map(|&(_, s)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-9 * best.abs().max(1.0);
    Ok(scored
        .into_iter()
        .filter(|&(_, s)| s >= best - tol)
        .map(|(a, _)| a)
        .collect())
}

/// Expected payoff of `U_{i-1}` for forwarding under belief `theta`.
pub fn expected_payoff_forward(spec: &GameSpec) -> f64 {
    let f = spec.fee();
    let corrupt = corrupt_forward_loss(spec);
    spec.theta * corrupt + (1.0 - spec.theta) * f
}

pub fn expected_payoff_noforward(_spec: &GameSpec) -> f64 {
    0.0
}

/// First mover's payoff against a corrupt recipient playing its equilibrium mix.
fn corrupt_forward_loss(spec: &GameSpec) -> f64 {
    let d = spec.d();
    match spec.protocol {
        GameProtocol::Htlc => {
            let o = spec.o(d, spec.alpha);
            let grief = -o - spec.o(spec.t_tilde, spec.remain_fwd) - spec.econ.mining_fee as f64;
            spec.q * -o + (1.0 - spec.q) * grief
        }
        GameProtocol::HtlcGp => -spec.o(d, spec.attack_value()),
    }
}

/// Belief below which forwarding beats not forwarding.
pub fn cutoff_theta(spec: &GameSpec) -> f64 {
    let f = spec.fee();
    if f <= 0.0 {
        return 0.0;
    }
    let denom = f - corrupt_forward_loss(spec);
    if denom <= 0.0 {
        return 1.0;
    }
    (f / denom).clamp(0.0, 1.0)
}

/// Whether `U_{i-1}` forwards at the configured belief.
pub fn forwards(spec: &GameSpec) -> bool {
    expected_payoff_forward(spec) > expected_payoff_noforward(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zero_rate() -> GameSpec {
        GameSpec {
            econ: EconomicParams {
                rate: 0.0,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn not_forward_is_zero() {
        let s = GameSpec::default();
        let p = payoff(&s, Nature::Corrupt, FirstAction::NotForward, None).unwrap();
        assert_eq!((p.first, p.second), (0.0, 0.0));
        assert!(payoff(
            &s,
            Nature::Corrupt,
            FirstAction::NotForward,
            Some(SecondAction::Accept)
        )
        .is_err());
        assert!(payoff(&s, Nature::Corrupt, FirstAction::Forward, None).is_err());
    }

    #[test]
    fn uncorrupt_accept() {
        let s = GameSpec::default();
        let p = payoff(
            &s,
            Nature::Uncorrupt,
            FirstAction::Forward,
            Some(SecondAction::Accept),
        )
        .unwrap();
        assert!((p.first - 1.015).abs() < 1e-12);
        assert_eq!(p.second, 15000.0);
    }

    #[test]
    fn eta_cases() {
        let s = GameSpec {
            setup_cost: 50.0,
            ..zero_rate()
        };
        assert_eq!(eta(&s, 1).unwrap(), -50.0);
        assert_eq!(eta(&s, 99).unwrap(), s.bribe() - 50.0);
        assert!(eta(&s, 0).is_err());
        assert!(eta(&s, 101).is_err());
    }

    #[test]
    fn cutoff_degenerate() {
        let s = GameSpec {
            econ: EconomicParams {
                rate: 0.0,
                mining_fee: 0,
                ..Default::default()
            },
            ..Default::default()
        };
        assert_eq!(cutoff_theta(&s), 1.0);
        let s = GameSpec {
            econ: EconomicParams::default().without_fees(),
            ..Default::default()
        };
        assert_eq!(cutoff_theta(&s), 0.0);
    }

    #[test]
    fn expected_payoff_examples() {
        let s = GameSpec::default();
        assert!((expected_payoff_forward(&s) - s.fee()).abs() < 1e-12);
        let s = GameSpec {
            theta: 1.0,
            q: 1.0,
            ..Default::default()
        };
        assert!((expected_payoff_forward(&s) + s.o(100.0, 15000.0)).abs() < 1e-12);
    }

    #[test]
    fn corrupt_best_responses() {
        let s = GameSpec::default();
        let br = best_response(&s, Nature::Corrupt).unwrap();
        assert_eq!(br, vec![SecondAction::Grief, SecondAction::WaitReject(99)]);
        let s = GameSpec {
            protocol: GameProtocol::HtlcGp,
            ..Default::default()
        };
        assert_eq!(
            best_response(&s, Nature::Corrupt).unwrap(),
            vec![SecondAction::WaitReject(99)]
        );
        assert_eq!(
            best_response(&s, Nature::Uncorrupt).unwrap(),
            vec![SecondAction::Accept]
        );
    }
}
