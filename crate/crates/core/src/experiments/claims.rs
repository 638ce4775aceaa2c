//! Closed-form loss percentages of the penalty protocols and a direct
//! accounting oracle.

use serde::{Deserialize, Serialize};

use crate::economics::{total_timeout, TimeoutSchedule, Timing};
use crate::error::{invalid, Result};
use crate::penalty::{attack_payment_value, cumulative_penalty};

/// Fraction of HTLC locked capacity removed by HTLC-GP with maximum path
/// length `n`.
pub fn loss_percent_htlcgp(gamma: f64, n: usize, timing: Timing) -> Result<f64> {
    if n < 2 {
        return Err(invalid("n", "must be at least 2"));
    }
    let (n, d, delta) = (n as f64, timing.d as f64, timing.delta as f64);
    Ok(gamma * n * (d / 2.0 + delta * (n - 2.0) / 6.0)
        / (1.0 + gamma * n * (d + (n - 1.0) * delta / 2.0)))
}

/// The two printed forms of the HTLC-GP-zeta penalty term. They differ in
/// the factor multiplying `delta / 3`: `2 n_max` or `2 n_max - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GpZetaVariant {
    TwoN,
    TwoNMinusOne,
}

fn gpzeta_numerator(
    gamma: f64,
    n_max: f64,
    n: f64,
    d: f64,
    delta: f64,
    variant: GpZetaVariant,
) -> f64 {
    let factor = match variant {
        GpZetaVariant::TwoN => 2.0 * n_max,
        GpZetaVariant::TwoNMinusOne => 2.0 * n_max - 1.0,
    };
    (n - n_max)
        + gamma
            * n_max
            * ((n - 1.0) * (d + (n_max - 1.0) * delta / 2.0)
                - (n_max - 1.0) / 2.0 * (d + factor * delta / 3.0))
}

/// Fraction of HTLC locked capacity removed by HTLC-GP-zeta, as the printed
/// closed form: the denominator normalises by the `n`-hop schedule.
pub fn loss_percent_gpzeta(
    gamma: f64,
    n_max: usize,
    n: usize,
    timing: Timing,
    variant: GpZetaVariant,
) -> Result<f64> {
    check_lengths(n_max, n)?;
    let (nm, nf, d, delta) = (n_max as f64, n as f64, timing.d as f64, timing.delta as f64);
    let num = gpzeta_numerator(gamma, nm, nf, d, delta, variant);
    Ok(num / ((nf - 1.0) * (1.0 + gamma * nf * d + gamma * nf * delta * (nf - 1.0) / 2.0)))
}

/// The same numerator normalised by the `n_max`-hop schedule the attacker
/// actually uses. Agrees with [`loss_oracle`] for every `n_max <= n`.
pub fn loss_percent_gpzeta_rebased(
    gamma: f64,
    n_max: usize,
    n: usize,
    timing: Timing,
) -> Result<f64> {
    check_lengths(n_max, n)?;
    let (nm, nf, d, delta) = (n_max as f64, n as f64, timing.d as f64, timing.delta as f64);
    let num = gpzeta_numerator(gamma, nm, nf, d, delta, GpZetaVariant::TwoNMinusOne);
    Ok(num / ((nf - 1.0) * (1.0 + gamma * total_timeout(n_max, timing) as f64)))
}

fn check_lengths(n_max: usize, n: usize) -> Result<()> {
    if n_max < 2 {
        return Err(invalid("n_max", "must be at least 2"));
    }
    if n_max > n {
        return Err(invalid("n_max", "cannot exceed n"));
    }
    Ok(())
}

/// Direct accounting of victim-locked capacity with fees off.
///
/// HTLC: an `n`-hop self-payment of `alpha` locks `(n - 1) alpha`. With
/// penalties the attacker routes `v` over `n_max` hops and the victims lock
/// `(n_max - 1) v` plus the penalties `Z_{v,1} .. Z_{v,n_max-1}`. Returns
/// `(htlc - gp) / htlc`.
pub fn loss_oracle(gamma: f64, n_max: usize, n: usize, timing: Timing) -> Result<f64> {
    check_lengths(n_max, n)?;
    let alpha = 100_000.0;
    let schedule = TimeoutSchedule::new(n_max, timing)?;
    let v = attack_payment_value(alpha, gamma, &schedule.timeouts);
    let amounts = vec![v; n_max];
    let htlc = (n - 1) as f64 * alpha;
    let mut gp = (n_max - 1) as f64 * v;
    for i in 1..n_max {
        gp += cumulative_penalty(&amounts, &schedule.timeouts, gamma, i);
    }
    Ok((htlc - gp) / htlc)
}

/// One row of a claims check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimRow {
    pub gamma: f64,
    pub n: usize,
    pub n_max: usize,
    pub oracle: f64,
    pub closed_form: f64,
    pub rel_err: f64,
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// HTLC-GP closed form against the oracle over a `(gamma, n)` grid.
pub fn check_htlcgp(gammas: &[f64], ns: &[usize], timing: Timing) -> Result<Vec<ClaimRow>> {
    let mut out = Vec::new();
    for &gamma in gammas {
        for &n in ns {
            let oracle = loss_oracle(gamma, n, n, timing)?;
            let closed = loss_percent_htlcgp(gamma, n, timing)?;
            out.push(ClaimRow {
                gamma,
                n,
                n_max: n,
                oracle,
                closed_form: closed,
                rel_err: rel_err(oracle, closed),
            });
        }
    }
    Ok(out)
}

/// HTLC-GP-zeta closed form (given variant) against the oracle.
pub fn check_gpzeta(
    points: &[(f64, usize)],
    n: usize,
    timing: Timing,
    variant: GpZetaVariant,
) -> Result<Vec<ClaimRow>> {
    points
        .iter()
        .map(|&(gamma, n_max)| {
            let oracle = loss_oracle(gamma, n_max, n, timing)?;
            let closed = loss_percent_gpzeta(gamma, n_max, n, timing, variant)?;
            Ok(ClaimRow {
                gamma,
                n,
                n_max,
                oracle,
                closed_form: closed,
                rel_err: rel_err(oracle, closed),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_rate_is_zero() {
        for n in 2..=20 {
            assert_eq!(loss_percent_htlcgp(0.0, n, Timing::default()).unwrap(), 0.0);
            assert!(loss_oracle(0.0, n, n, Timing::default()).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn two_hops() {
        let t = Timing::default();
        let g = 1e-4;
        let expect = g * 2.0 * 50.0 / (1.0 + 2.0 * g * 150.0);
        assert!((loss_percent_htlcgp(g, 2, t).unwrap() - expect).abs() < 1e-15);
        assert!(loss_percent_htlcgp(g, 1, t).is_err());
    }

    #[test]
    fn short_path_limit() {
        let v = loss_percent_gpzeta(0.0, 5, 20, Timing::default(), GpZetaVariant::TwoN).unwrap();
        assert!((v - 15.0 / 19.0).abs() < 1e-15);
        assert!(loss_percent_gpzeta(1e-5, 21, 20, Timing::default(), GpZetaVariant::TwoN).is_err());
    }

    #[test]
    fn rebased_matches_oracle() {
        let t = Timing::default();
        for n_max in 2..=20 {
            for g in [1e-7, 1e-5, 1e-3] {
                let a = loss_percent_gpzeta_rebased(g, n_max, 20, t).unwrap();
                let b = loss_oracle(g, n_max, 20, t).unwrap();
                assert!(rel_err(a, b) < 1e-9, "{n_max} {g}: {a} vs {b}");
            }
        }
    }
}
