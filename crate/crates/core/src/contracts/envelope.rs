use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{HashPair, PenaltyTerms, Secrets};
use crate::economics::Timing;
use crate::error::{invalid, Result};
use crate::netmodel::{NodeId, PaymentPath};

/// What the sender tells the party on one hop. Stands in for an onion layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopRecord {
    pub hashes: HashPair,
    pub amount: u64,
    pub timeout: u64,
    /// Cumulative penalty locked by the receiver of this hop.
    pub cgp: f64,
    pub next: NodeId,
}

/// Per-hop instructions of one payment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutingEnvelope {
    pub path: PaymentPath,
    pub terms: PenaltyTerms,
    pub timing: Timing,
    /// Digests the payee shared with the sender.
    pub hashes: HashPair,
    pub records: Vec<HopRecord>,
    /// Blinded path length handed to the payee.
    pub blind: Option<usize>,
    /// Routing attempt cost folded into the first penalty.
    pub psi: f64,
}

impl RoutingEnvelope {
    pub fn gamma(&self) -> f64 {
        self.terms.gamma()
    }

    pub fn record(&self, hop: usize) -> &HopRecord {
        &self.records[hop]
    }
}

/// Uniform draw from `kappa..=max_len`.
pub fn draw_blind<R: Rng + ?Sized>(kappa: usize, max_len: usize, rng: &mut R) -> Result<usize> {
    if kappa == 0 || kappa > max_len {
        return Err(invalid(
            "kappa",
            format!("path length {kappa} exceeds the cap {max_len}"),
        ));
    }
    Ok(rng.gen_range(kappa..=max_len))
}

/// Cumulative penalties `cgp_0..cgp_{kappa-1}` and the routing attempt cost.
///
/// With a blind `phi`, the attempt cost is chosen so the last penalty equals
/// `gamma * phi * alpha * D`, clamped at zero.
pub fn penalty_chain(
    amounts: &[u64],
    timeouts: &[u64],
    gamma: f64,
    blind: Option<usize>,
    d: u64,
) -> (Vec<f64>, f64) {
    let kappa = amounts.len();
    if kappa == 0 {
        return (Vec::new(), 0.0);
    }
    let tail: f64 = amounts
        .iter()
        .zip(timeouts)
        .skip(1)
        .map(|(&a, &t)| a as f64 * t as f64)
        .sum();
    let t0 = timeouts[0] as f64;
    let psi = match blind {
        Some(phi) => {
            let alpha = amounts[kappa - 1] as f64;
            ((phi as f64 * alpha * d as f64 - tail) / t0 - amounts[0] as f64).max(0.0)
        }
        None => 0.0,
    };
    let mut cgp = Vec::with_capacity(kappa);
    let mut acc = (amounts[0] as f64 + psi) * t0;
    cgp.push(gamma * acc);
    for j in 1..kappa {
        acc += amounts[j] as f64 * timeouts[j] as f64;
        cgp.push(gamma * acc);
    }
    (cgp, psi)
}

/// Pre-processing phase: samples preimages, draws the blind path length for
/// HTLC-GP-zeta and computes every hop record.
pub fn preprocess<R: Rng + ?Sized>(
    path: &PaymentPath,
    terms: PenaltyTerms,
    timing: Timing,
    rng: &mut R,
) -> Result<(RoutingEnvelope, Secrets)> {
    let blind = match terms.guarantee() {
        Some(p) => Some(draw_blind(path.kappa(), p.max_len, rng)?),
        None => None,
    };
    preprocess_with_blind(path, terms, timing, blind, rng)
}

/// [`preprocess`] with a caller-chosen blind.
pub fn preprocess_with_blind<R: Rng + ?Sized>(
    path: &PaymentPath,
    terms: PenaltyTerms,
    timing: Timing,
    blind: Option<usize>,
    rng: &mut R,
) -> Result<(RoutingEnvelope, Secrets)> {
    let kappa = path.kappa();
    if kappa == 0 || path.amounts.len() != kappa || path.timeouts.len() != kappa {
        return Err(invalid("path", "hops, amounts and timeouts disagree"));
    }
    if path.amounts.contains(&0) {
        return Err(invalid("amount", "must be positive"));
    }
    if let Some(p) = terms.guarantee() {
        if kappa > p.max_len {
            return Err(invalid(
                "kappa",
                format!("path length {kappa} exceeds the cap {}", p.max_len),
            ));
        }
        if let Some(phi) = blind {
            if phi < kappa || phi > p.max_len {
                return Err(invalid(
                    "phi",
                    "blind must lie between the path length and the cap",
                ));
            }
        }
    }
    let secrets = Secrets::generate(rng);
    let hashes = secrets.hashes();
    let gamma = terms.gamma();
    let blind = terms.guarantee().and(blind);
    let (cgp, psi) = penalty_chain(&path.amounts, &path.timeouts, gamma, blind, timing.d);
    let records = (0..kappa)
        .map(|i| HopRecord {
            hashes,
            amount: path.amounts[i],
            timeout: path.timeouts[i],
            cgp: cgp[i],
            next: path.hops[i + 1],
        })
        .collect();
    Ok((
        RoutingEnvelope {
            path: path.clone(),
            terms,
            timing,
            hashes,
            records,
            blind,
            psi,
        },
        secrets,
    ))
}
