//! Expected payoffs of the last-hop forwarding game across beliefs.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::games::{
    cutoff_theta, expected_payoff_forward, forwards, payoff, FirstAction, GameProtocol, GameSpec,
    Nature, SecondAction,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub protocols: Vec<GameProtocol>,
    pub thetas: Vec<f64>,
    pub amounts: Vec<f64>,
    pub rates: Vec<f64>,
    /// Every other game parameter.
    pub base: GameSpec,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            protocols: vec![GameProtocol::Htlc, GameProtocol::HtlcGp],
            thetas: (0..=1000).map(|i| i as f64 / 1000.0).collect(),
            amounts: vec![15_000.0, 30_000.0, 45_000.0, 60_000.0],
            rates: vec![0.1, 0.2, 0.3, 0.4],
            base: GameSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub theta: f64,
    pub protocol: GameProtocol,
    pub amount: f64,
    pub rate: f64,
    #[serde(rename = "E_first")]
    pub e_first: f64,
    #[serde(rename = "E_second_uncorrupt")]
    pub e_second_uncorrupt: f64,
    #[serde(rename = "E_second_corrupt")]
    pub e_second_corrupt: f64,
    pub decision: FirstAction,
    /// Expected payoff of forwarding, whether or not it is chosen.
    pub e_forward: f64,
}

/// Second mover's payoff when it is corrupt and plays its equilibrium
/// strategy: HTLC mixes wait-and-reject (probability `q`) with griefing,
/// HTLC-GP always waits and rejects one block before expiry.
fn corrupt_second(spec: &GameSpec) -> Result<f64> {
    let wait = SecondAction::WaitReject(spec.timing.d - 1);
    let w = payoff(spec, Nature::Corrupt, FirstAction::Forward, Some(wait))?.second;
    Ok(match spec.protocol {
        GameProtocol::Htlc => {
            let g = payoff(
                spec,
                Nature::Corrupt,
                FirstAction::Forward,
                Some(SecondAction::Grief),
            )?
            .second;
            spec.q * w + (1.0 - spec.q) * g
        }
        GameProtocol::HtlcGp => w,
    })
}

/// Evaluates every `(protocol, amount, rate, theta)` point, in that order.
pub fn run_game_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    if config.thetas.is_empty()
        || config.amounts.is_empty()
        || config.rates.is_empty()
        || config.protocols.is_empty()
    {
        return Err(invalid(
            "theta",
            "every sweep axis needs at least one value",
        ));
    }
    let mut rows = Vec::new();
    for &protocol in &config.protocols {
        for &amount in &config.amounts {
            for &rate in &config.rates {
                for &theta in &config.thetas {
                    let mut spec = config.base.clone();
                    spec.protocol = protocol;
                    spec.alpha = amount;
                    spec.econ.rate = rate;
                    spec.theta = theta;
                    spec.validate()?;
                    let e_forward = expected_payoff_forward(&spec);
                    let go = forwards(&spec);
                    let (e_first, e_unc, e_cor) = if go {
                        let unc = payoff(
                            &spec,
                            Nature::Uncorrupt,
                            FirstAction::Forward,
                            Some(SecondAction::Accept),
                        )?;
                        (e_forward, unc.second, corrupt_second(&spec)?)
                    } else {
                        (0.0, 0.0, 0.0)
                    };
                    rows.push(SweepRow {
                        theta,
                        protocol,
                        amount,
                        rate,
                        e_first,
                        e_second_uncorrupt: e_unc,
                        e_second_corrupt: e_cor,
                        decision: if go {
                            FirstAction::Forward
                        } else {
                            FirstAction::NotForward
                        },
                        e_forward,
                    });
                }
            }
        }
    }
    Ok(rows)
}

/// Where a curve stops forwarding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flip {
    pub protocol: GameProtocol,
    pub amount: f64,
    pub rate: f64,
    /// Smallest swept belief with decision `NF`, if any.
    pub first_not_forward: Option<f64>,
    /// Closed-form cutoff.
    pub cutoff: f64,
}

/// First `NF` belief of each curve next to its closed-form cutoff.
pub fn decision_flips(config: &SweepConfig, rows: &[SweepRow]) -> Vec<Flip> {
    let mut out = Vec::new();
    for &protocol in &config.protocols {
        for &amount in &config.amounts {
            for &rate in &config.rates {
                let first = rows
                    .iter()
                    .filter(|r| r.protocol == protocol && r.amount == amount && r.rate == rate)
                    .filter(|r| r.decision == FirstAction::NotForward)
                    .map(|r| r.theta)
                    .fold(None, |m: Option<f64>, t| Some(m.map_or(t, |m| m.min(t))));
                let mut spec = config.base.clone();
                spec.protocol = protocol;
                spec.alpha = amount;
                spec.econ.rate = rate;
                out.push(Flip {
                    protocol,
                    amount,
                    rate,
                    first_not_forward: first,
                    cutoff: cutoff_theta(&spec),
                });
            }
        }
    }
    out
}
