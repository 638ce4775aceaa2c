//! Penalty calculus for the guaranteed-minimum-compensation variant.

use serde::{Deserialize, Serialize};

use crate::economics::{total_timeout, EconomicParams, Timing};
use crate::error::{invalid, Error, Result};

/// Parameters of HTLC-GP-zeta.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyParams {
    pub gamma: f64,
    pub zeta: f64,
    pub k: f64,
    pub max_len: usize,
}

impl PenaltyParams {
    /// Derives the rate and path cap from `k` and `zeta`.
    pub fn from_guarantee(k: f64, zeta: f64, timing: Timing) -> Result<Self> {
        Ok(Self {
            gamma: penalty_rate(k, zeta, timing)?,
            zeta,
            k,
            max_len: max_path_length(k, zeta)?,
        })
    }
}

/// `gamma * sum_{j<i} amounts[j] * timeouts[j]`.
pub fn cumulative_penalty(amounts: &[f64], timeouts: &[u64], gamma: f64, i: usize) -> f64 {
    gamma
        * amounts
            .iter()
            .zip(timeouts)
            .take(i)
            .map(|(&a, &t)| a * t as f64)
            .sum::<f64>()
}

/// Largest path length whose minimum compensations fit the penalty cap:
/// `floor(k / zeta)`, with quotients within 1e-9 of an integer snapped to it.
pub fn max_path_length(k: f64, zeta: f64) -> Result<usize> {
    if !(zeta > 0.0) {
        return Err(Error::Unbounded("maximum path length"));
    }
    if !(k > 0.0) || !k.is_finite() {
        return Err(invalid("k", "must be positive"));
    }
    let q = k / zeta;
    let nearest = q.round();
    let n = if (q - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        q.floor()
    };
    Ok(n as usize)
}

/// `2 zeta^2 / (2 zeta D + delta (k - zeta))`.
pub fn penalty_rate(k: f64, zeta: f64, timing: Timing) -> Result<f64> {
    if !(zeta > 0.0) || zeta >= 1.0 {
        return Err(invalid("zeta", "must lie in (0, 1)"));
    }
    if !(k >= zeta) {
        return Err(invalid("k", "must be at least zeta"));
    }
    if timing.d == 0 {
        return Err(invalid("D", "must be positive"));
    }
    let d = timing.d as f64;
    let delta = timing.delta as f64;
    Ok(2.0 * zeta * zeta / (2.0 * zeta * d + delta * (k - zeta)))
}

/// Rate spreading `k` over the timeouts of an `n`-hop path:
/// `k / sum_{i=1}^{n} (D + (n - i) delta)`.
pub fn penalty_rate_for_length(k: f64, n: usize, timing: Timing) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n_max", "must be positive"));
    }
    Ok(k / total_timeout(n, timing) as f64)
}

/// Participation margin of a payee with liveness `h` facing a maximum
/// penalty of `k * alpha`.
pub fn participation_margin(
    h: f64,
    k: f64,
    alpha: f64,
    econ: &EconomicParams,
    d: u64,
    remain: f64,
    t_tilde: f64,
) -> f64 {
    let d = d as f64;
    let loss = k * alpha
        + econ.opportunity_cost(d, k * alpha)
        + econ.opportunity_cost(d, alpha)
        + econ.opportunity_cost(t_tilde, remain);
    h * alpha - (1.0 - h) * loss
}

/// Largest `k` keeping the participation margin non-negative, by bisection
/// to relative tolerance 1e-9 (at most 200 iterations).
pub fn max_penalty_ratio(
    h: f64,
    alpha: f64,
    econ: &EconomicParams,
    d: u64,
    remain: f64,
    t_tilde: f64,
) -> Result<f64> {
    if h >= 1.0 {
        return Err(Error::Unbounded("maximum penalty ratio"));
    }
    if !(h >= 0.0) {
        return Err(invalid("h", "must lie in [0, 1)"));
    }
    if !(alpha > 0.0) {
        return Err(invalid("alpha", "must be positive"));
    }
    let g = |k: f64| participation_margin(h, k, alpha, econ, d, remain, t_tilde);
    if g(0.0) < 0.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while g(hi) >= 0.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Unbounded("maximum penalty ratio"));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        if hi - lo <= 1e-9 * lo.max(f64::MIN_POSITIVE) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Value of the self-payment an attacker can route when `alpha` must also
/// cover the cumulative penalty: `alpha / (1 + gamma * sum t_j)`.
pub fn attack_payment_value(alpha: f64, gamma: f64, timeouts: &[u64]) -> f64 {
    let total: u64 = timeouts.iter().sum();
    alpha / (1.0 + gamma * total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_length_examples() {
        assert_eq!(max_path_length(0.005, 0.00025).unwrap(), 20);
        assert_eq!(max_path_length(0.005, 0.0025).unwrap(), 2);
        assert_eq!(max_path_length(1.0, 0.3).unwrap(), 3);
        assert_eq!(max_path_length(0.75, 0.0375).unwrap(), 20);
        assert!(matches!(
            max_path_length(1.0, 0.0),
            Err(Error::Unbounded(_))
        ));
    }

    #[test]
    fn rate_examples() {
        let t = Timing::default();
        assert!((penalty_rate(0.005, 0.00025, t).unwrap() - 2.38e-7).abs() < 0.01e-7);
        assert!((penalty_rate(1.0, 0.05, t).unwrap() - 4.76e-5).abs() < 0.01e-5);
    }

    #[test]
    fn cumulative_penalty_examples() {
        let a = [5.0, 5.0, 5.0];
        let t = [300, 200, 100];
        assert_eq!(cumulative_penalty(&a, &t, 0.1, 1), 0.1 * 5.0 * 300.0);
        assert_eq!(cumulative_penalty(&a, &t, 0.0, 3), 0.0);
        assert!((cumulative_penalty(&a, &t, 0.1, 3) - 0.1 * 5.0 * 600.0).abs() < 1e-9);
    }

    #[test]
    fn k_max_zero_rate() {
        let e = EconomicParams {
            rate: 0.0,
            ..Default::default()
        };
        let k = max_penalty_ratio(0.5, 15000.0, &e, 100, 50000.0, 1e6).unwrap();
        assert!((k - 1.0).abs() < 1e-8);
        assert!(matches!(
            max_penalty_ratio(1.0, 1.0, &e, 100, 0.0, 0.0),
            Err(Error::Unbounded(_))
        ));
    }

    #[test]
    fn payment_value() {
        let s = crate::economics::TimeoutSchedule::new(20, Timing::default()).unwrap();
        let v = attack_payment_value(31000.0, 1e-4, &s.timeouts);
        assert!((v - 10000.0).abs() < 1e-9);
        assert_eq!(attack_payment_value(7.0, 0.0, &s.timeouts), 7.0);
    }
}
