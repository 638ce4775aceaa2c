//! Fees, opportunity cost of locked coins, bribes and HTLC timeout schedules.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Fee policy and opportunity-cost parameters shared by every node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EconomicParams {
    /// Flat part of the forwarding fee, in satoshi.
    pub base_fee: f64,
    /// Proportional part of the forwarding fee.
    pub fee_rate: f64,
    /// Size of one unit transaction when pricing idle collateral, in satoshi.
    pub per_tx_val: u64,
    /// On-chain fee paid by whoever closes a channel, in satoshi.
    pub mining_fee: u64,
    /// Arrival rate of unit transactions per block.
    pub rate: f64,
}

impl Default for EconomicParams {
    fn default() -> Self {
        Self {
            base_fee: 1.0,
            fee_rate: 1e-6,
            per_tx_val: 1000,
            mining_fee: 154,
            rate: 0.2,
        }
    }
}

impl EconomicParams {
    /// The same policy with every fee set to zero.
    pub fn without_fees(self) -> Self {
        Self {
            base_fee: 0.0,
            fee_rate: 0.0,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !finite_nonneg(self.base_fee) {
            return Err(invalid("base_fee", "must be finite and non-negative"));
        }
        if !finite_nonneg(self.fee_rate) {
            return Err(invalid("fee_rate", "must be finite and non-negative"));
        }
        if !finite_nonneg(self.rate) {
            return Err(invalid("rate", "must be finite and non-negative"));
        }
        if self.per_tx_val == 0 {
            return Err(invalid("per_tx_val", "must be positive"));
        }
        Ok(())
    }

    /// Forwarding fee charged on `amount`.
    pub fn fee(&self, amount: f64) -> f64 {
        self.base_fee + self.fee_rate * amount
    }

    /// Forwarding fee rounded half-up to whole satoshi.
    pub fn fee_sat(&self, amount: u64) -> u64 {
        round_half_up(self.fee(amount as f64))
    }

    /// Fee earned by one unit transaction of `per_tx_val`.
    pub fn unit_fee(&self) -> f64 {
        self.fee(self.per_tx_val as f64)
    }

    /// Opportunity cost of keeping `val` satoshi idle for `t` blocks at the
    /// configured arrival rate.
    pub fn opportunity_cost(&self, t: f64, val: f64) -> f64 {
        self.opportunity_cost_at(self.rate, t, val)
    }

    /// Opportunity cost with an explicit arrival rate.
    pub fn opportunity_cost_at(&self, rate: f64, t: f64, val: f64) -> f64 {
        let cap = if val <= 0.0 {
            0
        } else {
            (val / self.per_tx_val as f64).floor() as u64
        };
        truncated_poisson_mean(rate * t, cap) * self.unit_fee()
    }

    /// Bribe needed to corrupt a node: the payment value, the setup cost and
    /// twice the opportunity cost of `alpha` locked for `d` blocks.
    pub fn bribe(&self, alpha: f64, setup_cost: f64, d: u64) -> f64 {
        alpha + setup_cost + 2.0 * self.opportunity_cost(d as f64, alpha)
    }
}

pub(crate) fn round_half_up(x: f64) -> u64 {
    if x <= 0.0 {
        0
    } else {
        (x + 0.5).floor() as u64
    }
}

/// `sum_{x=0}^{cap} x * P(X = x)` for `X ~ Poisson(lambda)`.
///
/// Probabilities follow `p_{x+1} = p_x * lambda / (x + 1)`. When `e^{-lambda}`
/// would underflow, unnormalised weights are propagated outwards from the
/// mode and divided by their total.
pub fn truncated_poisson_mean(lambda: f64, cap: u64) -> f64 {
    if lambda <= 0.0 || cap == 0 {
        return 0.0;
    }
    if lambda < 700.0 {
        let mut p = (-lambda).exp();
        let mut sum = 0.0;
        for x in 1..=cap {
            p *= lambda / x as f64;
            let term = x as f64 * p;
            sum += term;
            if x as f64 > lambda && term <= sum * 1e-18 {
                break;
            }
        }
        return sum;
    }
    let mode = lambda.floor() as u64;
    let (mut total, mut below) = (1.0, if mode <= cap { mode as f64 } else { 0.0 });
    let mut w = 1.0;
    for x in (0..mode).rev() {
        w *= (x + 1) as f64 / lambda;
        if w < 1e-300 {
            break;
        }
        total += w;
        if x <= cap {
            below += x as f64 * w;
        }
    }
    w = 1.0;
    for x in mode + 1.. {
        w *= lambda / x as f64;
        if w < 1e-300 {
            break;
        }
        total += w;
        if x <= cap {
            below += x as f64 * w;
        }
    }
    below / total
}

/// The least HTLC timeout and the worst-case on-chain confirmation delay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    pub d: u64,
    pub delta: u64,
}

impl Default for Timing {
    fn default() -> Self {
        Self { d: 100, delta: 100 }
    }
}

/// Per-hop timeouts of a `kappa`-hop route, longest first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeoutSchedule {
    pub timing: Timing,
    pub timeouts: Vec<u64>,
}

impl TimeoutSchedule {
    pub fn new(kappa: usize, timing: Timing) -> Result<Self> {
        if kappa == 0 {
            return Err(invalid("kappa", "a route needs at least one hop"));
        }
        if timing.d == 0 {
            return Err(invalid("D", "must be positive"));
        }
        let timeouts = (0..kappa)
            .map(|i| timing.d + (kappa - 1 - i) as u64 * timing.delta)
            .collect();
        Ok(Self { timing, timeouts })
    }

    pub fn kappa(&self) -> usize {
        self.timeouts.len()
    }

    pub fn total(&self) -> u64 {
        self.timeouts.iter().sum()
    }
}

/// `kappa * D + kappa * (kappa - 1) * delta / 2`.
pub fn total_timeout(kappa: usize, timing: Timing) -> u64 {
    let k = kappa as u64;
    k * timing.d + k * k.saturating_sub(1) * timing.delta / 2
}

/// Per-hop amounts of a route delivering `amount` to the payee: the last hop
/// carries `amount` and each earlier hop adds the fee of the hop after it.
pub fn hop_amounts(amount: u64, kappa: usize, econ: &EconomicParams) -> Vec<u64> {
    let mut out = vec![0; kappa];
    if kappa == 0 {
        return out;
    }
    out[kappa - 1] = amount;
    for j in (1..kappa).rev() {
        out[j - 1] = out[j] + econ.fee_sat(out[j]);
    }
    out
}

/// Real-valued counterpart of [`hop_amounts`].
pub fn hop_amounts_real(amount: f64, kappa: usize, econ: &EconomicParams) -> Vec<f64> {
    let mut out = vec![0.0; kappa];
    if kappa == 0 {
        return out;
    }
    out[kappa - 1] = amount;
    for j in (1..kappa).rev() {
        out[j - 1] = out[j] + econ.fee(out[j]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fee_examples() {
        let e = EconomicParams::default();
        assert!((e.fee(15000.0) - 1.015).abs() < 1e-12);
        assert_eq!(e.fee(0.0), 1.0);
        let z = e.without_fees();
        assert_eq!(z.fee(123456.0), 0.0);
        assert_eq!(e.fee_sat(15000), 1);
        assert_eq!(e.fee_sat(500_000), 2);
    }

    #[test]
    fn opportunity_cost_edges() {
        let e = EconomicParams {
            rate: 0.1,
            ..Default::default()
        };
        assert_eq!(e.opportunity_cost(10.0, 0.0), 0.0);
        assert_eq!(e.opportunity_cost(0.0, 5000.0), 0.0);
        let expect = 2.0 * (-1.0f64).exp();
        assert!((truncated_poisson_mean(1.0, 2) - expect).abs() < 1e-15);
        assert!((e.opportunity_cost(10.0, 2000.0) - expect * 1.001).abs() < 1e-12);
    }

    #[test]
    fn large_lambda_uses_log_path() {
        let big = truncated_poisson_mean(5000.0, 100_000);
        assert!((big - 5000.0).abs() < 1e-6);
        assert_eq!(truncated_poisson_mean(5000.0, 10), 0.0);
    }

    #[test]
    fn schedule() {
        let s = TimeoutSchedule::new(3, Timing::default()).unwrap();
        assert_eq!(s.timeouts, vec![300, 200, 100]);
        assert_eq!(s.total(), 600);
        assert_eq!(total_timeout(20, Timing::default()), 21000);
        assert_eq!(
            TimeoutSchedule::new(1, Timing::default()).unwrap().timeouts,
            vec![100]
        );
        assert!(TimeoutSchedule::new(0, Timing::default()).is_err());
    }

    #[test]
    fn bribe_examples() {
        let e = EconomicParams {
            rate: 0.0,
            ..Default::default()
        };
        assert_eq!(e.bribe(0.0, 0.0, 100), 0.0);
        assert_eq!(e.bribe(15000.0, 100.0, 100), 15100.0);
    }

    #[test]
    fn hop_amount_recursion() {
        let e = EconomicParams::default();
        let a = hop_amounts(15000, 3, &e);
        assert_eq!(a, vec![15002, 15001, 15000]);
        for j in 1..3 {
            assert_eq!(a[j - 1], a[j] + e.fee_sat(a[j]));
        }
        assert_eq!(hop_amounts(700, 4, &e.without_fees()), vec![700; 4]);
    }
}
