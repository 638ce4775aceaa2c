//! Share of honest payments that still complete once penalties need
//! reverse liquidity.

use serde::{Deserialize, Serialize};

use super::{par_map, random_walks, stream_rng, Walk};
use crate::contracts::{
    run_gp, run_htlc, CheckPolicy, PayeeAction, PenaltyTerms, RunContext, RunOutcome,
};
use crate::economics::{EconomicParams, Timing};
use crate::error::{invalid, Result};
use crate::netmodel::{ChannelGraph, PaymentPath};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessConfig {
    pub gammas: Vec<f64>,
    pub transactions: usize,
    pub kappa_min: usize,
    pub kappa_max: usize,
    pub alpha_min: u64,
    pub alpha_max: u64,
    pub timing: Timing,
    pub econ: EconomicParams,
    pub seed: u64,
}

impl Default for SuccessConfig {
    fn default() -> Self {
        Self {
            gammas: vec![0.0, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3],
            transactions: 3000,
            kappa_min: 5,
            kappa_max: 20,
            alpha_min: 10_000,
            alpha_max: 100_000,
            timing: Timing::default(),
            econ: EconomicParams::default(),
            seed: 1,
        }
    }
}

impl SuccessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gammas.is_empty() {
            return Err(invalid("gamma", "sweep is empty"));
        }
        if self.gammas.iter().any(|g| !(*g >= 0.0) || !g.is_finite()) {
            return Err(invalid("gamma", "rates must be finite and non-negative"));
        }
        if self.transactions == 0 {
            return Err(invalid("transactions", "must be positive"));
        }
        self.econ.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessRow {
    pub gamma: f64,
    pub htlc_success: usize,
    pub gp_success: usize,
    pub transactions: usize,
    pub success_ratio: f64,
}

/// Executes `walks` in order on a copy of `graph`; payees release promptly.
/// Returns the number that paid.
fn replay(
    graph: &ChannelGraph,
    walks: &[Walk],
    terms: PenaltyTerms,
    config: &SuccessConfig,
    stream: u64,
) -> Result<usize> {
    let mut g = graph.clone();
    let mut rng = stream_rng(config.seed, stream);
    let ctx = RunContext {
        econ: config.econ,
        policy: CheckPolicy::Altruistic,
        mu: 1,
    };
    let mut paid = 0;
    for w in walks {
        let path =
            PaymentPath::with_schedule(w.hops.clone(), w.amount, &config.econ, config.timing);
        let report = match terms {
            PenaltyTerms::None => run_htlc(
                &mut g,
                &path,
                config.timing,
                PayeeAction::ReleaseX,
                &ctx,
                &mut rng,
            )?,
            _ => run_gp(
                &mut g,
                &path,
                terms,
                config.timing,
                PayeeAction::ReleaseX,
                &ctx,
                &mut rng,
            )?,
        };
        if report.outcome == RunOutcome::Paid {
            paid += 1;
        }
    }
    Ok(paid)
}

/// Replays one random-walk workload under HTLC and under HTLC-GP at each
/// rate, starting from the same balances every time.
pub fn run_success_rate(
    graph: &ChannelGraph,
    config: &SuccessConfig,
    jobs: usize,
) -> Result<Vec<SuccessRow>> {
    config.validate()?;
    let mut rng = stream_rng(config.seed, 0);
    let walks = random_walks(
        graph,
        config.transactions,
        (config.kappa_min, config.kappa_max),
        (config.alpha_min, config.alpha_max),
        &mut rng,
    )?;
    let mut points = vec![PenaltyTerms::None];
    points.extend(config.gammas.iter().map(|&g| PenaltyTerms::Rate(g)));
    let indexed: Vec<(usize, PenaltyTerms)> = points.into_iter().enumerate().collect();
    let counts = par_map(&indexed, jobs, |(i, terms)| {
        replay(graph, &walks, *terms, config, 1 + *i as u64)
    })
    .into_iter()
    .collect::<Result<Vec<usize>>>()?;
    let htlc = counts[0];
    Ok(config
        .gammas
        .iter()
        .zip(&counts[1..])
        .map(|(&gamma, &gp)| SuccessRow {
            gamma,
            htlc_success: htlc,
            gp_success: gp,
            transactions: config.transactions,
            success_ratio: if htlc == 0 {
                0.0
            } else {
                gp as f64 / htlc as f64
            },
        })
        .collect())
}
