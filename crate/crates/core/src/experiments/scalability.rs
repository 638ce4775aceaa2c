//! Throughput of each protocol over growing request batches, with and
//! without belief checks.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{par_map, random_requests, stream_rng, Request};
use crate::contracts::{
    run_gp, run_htlc, CheckPolicy, PayeeAction, PenaltyTerms, Protocol, RunContext, RunOutcome,
};
use crate::economics::{EconomicParams, Timing};
use crate::error::{invalid, Result};
use crate::netmodel::{find_route, ChannelGraph};
use crate::penalty::PenaltyParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalabilityConfig {
    pub counts: Vec<usize>,
    pub protocols: Vec<Protocol>,
    /// Beliefs for rational mode; altruistic mode always runs.
    pub thetas: Vec<f64>,
    pub q: f64,
    pub gamma: f64,
    pub k: f64,
    pub zeta: f64,
    pub n: usize,
    pub alpha_min: u64,
    pub alpha_max: u64,
    pub timing: Timing,
    pub econ: EconomicParams,
    pub seed: u64,
}

impl Default for ScalabilityConfig {
    fn default() -> Self {
        Self {
            counts: vec![100, 1000, 5000],
            protocols: vec![Protocol::Htlc, Protocol::HtlcGp, Protocol::HtlcGpZeta],
            thetas: vec![0.05, 0.5],
            q: 0.7,
            gamma: 1e-5,
            k: 0.25,
            zeta: 0.025,
            n: 20,
            alpha_min: 10_000,
            alpha_max: 100_000,
            timing: Timing::default(),
            econ: EconomicParams::default(),
            seed: 1,
        }
    }
}

impl ScalabilityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.counts.is_empty() || self.protocols.is_empty() {
            return Err(invalid("counts", "sweep is empty"));
        }
        if self.thetas.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(invalid("theta", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.q) {
            return Err(invalid("q", "must lie in [0, 1]"));
        }
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(invalid("gamma", "must be finite and non-negative"));
        }
        if self.n == 0 {
            return Err(invalid("n", "must be positive"));
        }
        PenaltyParams::from_guarantee(self.k, self.zeta, self.timing)?;
        self.econ.validate()
    }

    fn terms(&self, p: Protocol) -> Result<PenaltyTerms> {
        Ok(match p {
            Protocol::Htlc => PenaltyTerms::None,
            Protocol::HtlcGp => PenaltyTerms::Rate(self.gamma),
            Protocol::HtlcGpZeta => PenaltyTerms::Guarantee(PenaltyParams::from_guarantee(
                self.k,
                self.zeta,
                self.timing,
            )?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalabilityRow {
    pub requests: usize,
    pub protocol: Protocol,
    pub mode: String,
    pub theta: Option<f64>,
    pub completed: usize,
    pub no_route: usize,
    pub aborted: usize,
    /// Wall time; excluded from serialised reports so they stay reproducible.
    #[serde(skip)]
    pub wall_ms: f64,
}

fn process(
    graph: &ChannelGraph,
    requests: &[Request],
    terms: PenaltyTerms,
    policy: CheckPolicy,
    config: &ScalabilityConfig,
    stream: u64,
) -> Result<(usize, usize, usize, f64)> {
    let started = Instant::now();
    let mut g = graph.clone();
    let mut rng = stream_rng(config.seed, stream);
    let ctx = RunContext {
        econ: config.econ,
        policy,
        mu: 1,
    };
    let max_len = terms
        .guarantee()
        .map_or(config.n, |p| p.max_len.min(config.n));
    let (mut done, mut no_route, mut aborted) = (0, 0, 0);
    for r in requests {
        let Some(path) = find_route(
            &g,
            r.src,
            r.dst,
            r.amount,
            max_len,
            &config.econ,
            config.timing,
        ) else {
            no_route += 1;
            continue;
        };
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
        match report.outcome {
            RunOutcome::Paid => done += 1,
            _ => aborted += 1,
        }
    }
    Ok((
        done,
        no_route,
        aborted,
        started.elapsed().as_secs_f64() * 1e3,
    ))
}

/// For every batch size, protocol and mode, routes and pays the first
/// `count` requests of one seeded workload on a fresh copy of `graph`.
pub fn run_scalability(
    graph: &ChannelGraph,
    config: &ScalabilityConfig,
    jobs: usize,
) -> Result<Vec<ScalabilityRow>> {
    config.validate()?;
    let max = *config.counts.iter().max().expect("non-empty");
    let requests = random_requests(
        graph,
        max,
        (config.alpha_min, config.alpha_max),
        &mut stream_rng(config.seed, 0),
    )?;
    let mut modes = vec![(CheckPolicy::Altruistic, None)];
    modes.extend(config.thetas.iter().map(|&t| {
        (
            CheckPolicy::Rational {
                theta: t,
                q: config.q,
            },
            Some(t),
        )
    }));
    let mut points = Vec::new();
    for &count in &config.counts {
        for &protocol in &config.protocols {
            for &(policy, theta) in &modes {
                points.push((count, protocol, policy, theta));
            }
        }
    }
    let indexed: Vec<(usize, (usize, Protocol, CheckPolicy, Option<f64>))> =
        points.into_iter().enumerate().collect();
    par_map(&indexed, jobs, |&(i, (count, protocol, policy, theta))| {
        let terms = config.terms(protocol)?;
        let (completed, no_route, aborted, wall_ms) = process(
            graph,
            &requests[..count],
            terms,
            policy,
            config,
            1 + i as u64,
        )?;
        Ok(ScalabilityRow {
            requests: count,
            protocol,
            mode: if theta.is_some() {
                "rational"
            } else {
                "altruistic"
            }
            .to_string(),
            theta,
            completed,
            no_route,
            aborted,
            wall_ms,
        })
    })
    .into_iter()
    .collect()
}
