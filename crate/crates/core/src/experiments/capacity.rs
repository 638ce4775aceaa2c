//! Victim capacity locked by a budget-limited attacker, relative to HTLC.

use serde::{Deserialize, Serialize};

use super::{par_map, stream_rng};
use crate::attacker::{run_campaign, AttackerConfig, Strategy};
use crate::contracts::{CheckPolicy, PenaltyTerms, Protocol, RunContext};
use crate::economics::{EconomicParams, Timing};
use crate::error::{invalid, Result};
use crate::netmodel::ChannelGraph;
use crate::penalty::PenaltyParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityConfig {
    /// Rates swept for HTLC-GP.
    pub gammas: Vec<f64>,
    /// `(k, zeta)` pairs swept for HTLC-GP-zeta, each paired with HTLC-GP
    /// at the derived rate.
    pub guarantees: Vec<(f64, f64)>,
    pub budget: u64,
    pub alpha: u64,
    pub n: usize,
    pub timing: Timing,
    pub setup_cost: u64,
    pub strategy: Strategy,
    pub seed: u64,
}

impl Default for CapacityConfig {
    fn default() -> Self {
        Self {
            gammas: vec![1e-7, 1e-6, 1e-5, 1e-4, 1e-3],
            guarantees: vec![(0.25, 0.025)],
            budget: 10_000_000,
            alpha: 100_000,
            n: 20,
            timing: Timing::default(),
            setup_cost: 0,
            strategy: Strategy::WaitRejectAtDeadline,
            seed: 1,
        }
    }
}

impl CapacityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gammas.is_empty() && self.guarantees.is_empty() {
            return Err(invalid("gamma", "sweep is empty"));
        }
        if self.gammas.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) {
            return Err(invalid("gamma", "rates must be finite and non-negative"));
        }
        if self.alpha == 0 {
            return Err(invalid("alpha", "must be positive"));
        }
        if self.n < 3 {
            return Err(invalid("n", "an attack cycle needs at least three hops"));
        }
        for &(k, zeta) in &self.guarantees {
            PenaltyParams::from_guarantee(k, zeta, self.timing)?;
        }
        Ok(())
    }

    fn attacker(&self) -> AttackerConfig {
        AttackerConfig {
            budget: self.budget,
            alpha: self.alpha,
            setup_cost: self.setup_cost,
            timing: self.timing,
            n: self.n,
            strategy: self.strategy,
            econ: EconomicParams::default().without_fees(),
        }
    }
}

/// One sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityRow {
    pub protocol: Protocol,
    pub gamma: f64,
    pub k: Option<f64>,
    pub zeta: Option<f64>,
    pub n_max: usize,
    pub instances: usize,
    pub victim_locked: u64,
    pub baseline_locked: u64,
    pub ratio_locked: f64,
    pub loss_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub baseline_instances: usize,
    pub baseline_locked: u64,
    /// Set when the HTLC attacker found no cycle at all.
    pub infeasible: bool,
    pub rows: Vec<CapacityRow>,
}

/// Runs the HTLC baseline campaign and one campaign per sweep point, each on
/// its own copy of `graph` with fees off and altruistic forwarding.
pub fn run_capacity_experiment(
    graph: &ChannelGraph,
    config: &CapacityConfig,
    jobs: usize,
) -> Result<CapacityReport> {
    config.validate()?;
    let attacker = config.attacker();
    let ctx = RunContext {
        econ: attacker.econ,
        policy: CheckPolicy::Altruistic,
        mu: 1,
    };
    let mut points: Vec<(PenaltyTerms, Option<(f64, f64)>)> = vec![(PenaltyTerms::None, None)];
    points.extend(config.gammas.iter().map(|&g| (PenaltyTerms::Rate(g), None)));
    for &(k, zeta) in &config.guarantees {
        let p = PenaltyParams::from_guarantee(k, zeta, config.timing)?;
        points.push((PenaltyTerms::Guarantee(p), Some((k, zeta))));
        points.push((PenaltyTerms::Rate(p.gamma), Some((k, zeta))));
    }
    let indexed: Vec<(usize, (PenaltyTerms, Option<(f64, f64)>))> =
        points.into_iter().enumerate().collect();
    let results = par_map(&indexed, jobs, |(i, (terms, _))| {
        let mut g = graph.clone();
        let mut rng = stream_rng(config.seed, *i as u64);
        run_campaign(&mut g, terms, &attacker, &ctx, &mut rng)
    });
    let mut results = results.into_iter();
    let baseline = results.next().expect("baseline point")?;
    let base = baseline.victim_locked;
    let mut rows = Vec::new();
    for ((_, (terms, grid)), res) in indexed.iter().skip(1).zip(results) {
        let s = res?;
        let ratio = if base == 0 {
            0.0
        } else {
            s.victim_locked as f64 / base as f64
        };
        rows.push(CapacityRow {
            protocol: terms.protocol(),
            gamma: terms.gamma(),
            k: grid.map(|g| g.0),
            zeta: grid.map(|g| g.1),
            n_max: terms
                .guarantee()
                .map_or(config.n, |p| p.max_len.min(config.n)),
            instances: s.instances,
            victim_locked: s.victim_locked,
            baseline_locked: base,
            ratio_locked: ratio,
            loss_pct: 1.0 - ratio,
        });
    }
    Ok(CapacityReport {
        baseline_instances: baseline.instances,
        baseline_locked: base,
        infeasible: baseline.instances == 0,
        rows,
    })
}
