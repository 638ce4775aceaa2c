//! Subcommand bodies. Each turns a resolved [`Config`] into an [`Output`].

use std::fmt::Write as _;

use serde::Serialize;

use griefsim::attacker::{candidate_nodes, execute_attack, plan_attack, AttackerConfig, Strategy};
use griefsim::contracts::{CheckPolicy, PenaltyTerms, Protocol, RunContext};
use griefsim::experiments::{
    check_gpzeta, check_htlcgp, decision_flips, guarantee_grid, loss_oracle,
    loss_percent_gpzeta_rebased, run_capacity_experiment, run_game_sweep, run_scalability,
    run_success_rate, stream_rng, to_csv, CapacityConfig, GpZetaVariant, ScalabilityConfig,
    SuccessConfig, SweepConfig, GUARANTEE_GRID,
};
use griefsim::games::{GameProtocol, GameSpec};
use griefsim::netmodel::synthetic::{scale_free, SyntheticParams};
use griefsim::netmodel::{find_route, load_snapshot, write_snapshot};
use griefsim::penalty::{max_penalty_ratio, penalty_rate_for_length, PenaltyParams};
use griefsim::{BalanceMode, ChannelGraph, EconomicParams, Timing};

use crate::config::Config;
use crate::{CliError, Output};

type Result<T> = std::result::Result<T, CliError>;

pub fn dispatch(name: &str, cfg: &Config, jobs: usize) -> Result<Output> {
    match name {
        "snapshot-info" => snapshot_info(cfg),
        "route" => route(cfg),
        "game-sweep" => game_sweep(cfg),
        "penalty-calc" => penalty_calc(cfg),
        "claims-check" => claims_check(cfg),
        "table2" => guarantee_table(cfg),
        "capacity" => capacity(cfg, jobs),
        "success-rate" => success_rate(cfg, jobs),
        "scalability" => scalability(cfg, jobs),
        "attack-trace" => attack_trace(cfg),
        other => Err(CliError::Config(format!("unknown subcommand `{other}`"))),
    }
}

fn timing(cfg: &Config) -> Result<Timing> {
    Ok(Timing {
        d: cfg.get("D")?,
        delta: cfg.get("delta")?,
    })
}

fn econ(cfg: &Config) -> Result<EconomicParams> {
    let e = EconomicParams {
        base_fee: cfg.get("base_fee")?,
        fee_rate: cfg.get("fee_rate")?,
        per_tx_val: cfg.get("per_tx_val")?,
        mining_fee: cfg.get("mining_fee")?,
        rate: if cfg.raw("rate").is_empty() {
            0.2
        } else {
            cfg.get("rate")?
        },
    };
    e.validate()?;
    Ok(e)
}

fn graph(cfg: &Config) -> Result<ChannelGraph> {
    let mode = match cfg.raw("balance_mode") {
        "split" => BalanceMode::Split,
        "unilateral" => BalanceMode::Unilateral,
        other => {
            return Err(CliError::Config(format!(
                "key `balance_mode`: expected split or unilateral, got `{other}`"
            )))
        }
    };
    match cfg.raw("snapshot") {
        "" => Err(CliError::Config("key `snapshot` is required".into())),
        "synthetic" => Ok(ChannelGraph::from_records(
            &scale_free(&SyntheticParams::default()),
            mode,
        )?),
        path => load_snapshot(path, mode).map_err(|e| match e {
            griefsim::Error::Io(io) => {
                CliError::Config(format!("key `snapshot`: cannot read `{path}`: {io}"))
            }
            other => other.into(),
        }),
    }
}

fn protocol(name: &str, s: &str) -> Result<Protocol> {
    s.parse()
        .map_err(|e| CliError::Config(format!("key `{name}`: {e}")))
}

fn game_protocol(s: &str) -> Result<GameProtocol> {
    match s {
        "htlc" => Ok(GameProtocol::Htlc),
        "htlc_gp" | "htlc-gp" => Ok(GameProtocol::HtlcGp),
        other => Err(CliError::Config(format!(
            "key `protocols`: unknown game protocol `{other}`"
        ))),
    }
}

fn strategy(cfg: &Config) -> Result<Strategy> {
    match cfg.raw("strategy") {
        "wait_reject" | "wait_reject_at_deadline" => Ok(Strategy::WaitRejectAtDeadline),
        "grief" => Ok(Strategy::Grief),
        other => Err(CliError::Config(format!(
            "key `strategy`: expected wait_reject or grief, got `{other}`"
        ))),
    }
}

fn pairs(cfg: &Config, name: &str) -> Result<Vec<(f64, f64)>> {
    cfg.raw(name)
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let bad = || CliError::Config(format!("key `{name}`: expected k:zeta, got `{s}`"));
            let (k, z) = s.split_once(':').ok_or_else(bad)?;
            Ok((
                k.trim().parse().map_err(|_| bad())?,
                z.trim().parse().map_err(|_| bad())?,
            ))
        })
        .collect()
}

fn json<T: Serialize + ?Sized>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v).map_err(griefsim::Error::from)?;
    s.push('\n');
    Ok(s)
}

fn snapshot_info(cfg: &Config) -> Result<Output> {
    let g = graph(cfg)?;
    let degree = |d: usize| g.nodes().filter(|&v| g.degree(v) == d).count();
    let info = serde_json::json!({
        "nodes": g.node_count(),
        "channels": g.channel_count(),
        "total_capacity_sat": g.total_funds() as u64,
        "degree_one": degree(1),
        "degree_two": degree(2),
        "max_degree": g.nodes().map(|v| g.degree(v)).max().unwrap_or(0),
        "attack_candidates": candidate_nodes(&g).len(),
    });
    let mut csv = Vec::new();
    write_snapshot(&g, &mut csv)?;
    let mut summary = String::new();
    for (k, v) in info.as_object().expect("object") {
        writeln!(summary, "{k}={v}").unwrap();
    }
    Ok(Output {
        summary,
        files: vec![
            (".json".into(), json(&info)?),
            (
                "_snapshot.csv".into(),
                String::from_utf8(csv).expect("utf-8"),
            ),
        ],
        infeasible: None,
    })
}

fn route(cfg: &Config) -> Result<Output> {
    let g = graph(cfg)?;
    let e = econ(cfg)?;
    let t = timing(cfg)?;
    let src = g.node(cfg.raw("src"))?;
    let dst = g.node(cfg.raw("dst"))?;
    let amount: u64 = cfg.get("amount")?;
    let n: usize = cfg.get("n")?;
    let Some(path) = find_route(&g, src, dst, amount, n, &e, t) else {
        return Ok(Output {
            summary: String::new(),
            files: Vec::new(),
            infeasible: Some(format!("no route of at most {n} hops carries {amount} sat")),
        });
    };
    let hops: Vec<&str> = path.hops.iter().map(|&h| g.name(h)).collect();
    let report = serde_json::json!({
        "kappa": path.kappa(),
        "hops": hops,
        "amounts": path.amounts,
        "timeouts": path.timeouts,
    });
    Ok(Output {
        summary: format!(
            "{}\nkappa={} amounts={:?}\n",
            hops.join(" -> "),
            path.kappa(),
            path.amounts
        ),
        files: vec![(".json".into(), json(&report)?)],
        infeasible: None,
    })
}

fn game_sweep(cfg: &Config) -> Result<Output> {
    let (lo, hi): (f64, f64) = (cfg.get("theta_min")?, cfg.get("theta_max")?);
    let steps: usize = cfg.get("theta_steps")?;
    if steps == 0 || !(lo <= hi) {
        return Err(CliError::Config(
            "keys `theta_min`, `theta_max`, `theta_steps` give an empty sweep".into(),
        ));
    }
    let base = GameSpec {
        q: cfg.get("q")?,
        gamma: cfg.get("gamma")?,
        n: cfg.get("n")?,
        kappa: cfg.get("kappa")?,
        remain_fwd: cfg.get("remain_fwd")?,
        remain_bwd: cfg.get("remain_bwd")?,
        t_tilde: cfg.get("t_tilde")?,
        setup_cost: cfg.get("setup_cost")?,
        timing: timing(cfg)?,
        econ: econ(cfg)?,
        ..GameSpec::default()
    };
    let sweep = SweepConfig {
        protocols: cfg
            .list::<String>("protocols")?
            .iter()
            .map(|s| game_protocol(s))
            .collect::<Result<_>>()?,
        thetas: (0..=steps)
            .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
            .collect(),
        amounts: cfg.list("amounts")?,
        rates: cfg.list("rates")?,
        base,
    };
    let rows = run_game_sweep(&sweep)?;
    let flips = decision_flips(&sweep, &rows);
    let mut summary = String::new();
    for f in &flips {
        let first = f
            .first_not_forward
            .map_or("none".to_string(), |t| format!("{t}"));
        writeln!(
            summary,
            "{:?} amount={} rate={}: first NF at theta={first}, cutoff={:.6}",
            f.protocol, f.amount, f.rate, f.cutoff
        )
        .unwrap();
    }
    Ok(Output {
        summary,
        files: vec![
            (".csv".into(), to_csv(&rows)?),
            ("_flips.json".into(), json(&flips)?),
        ],
        infeasible: None,
    })
}

fn penalty_calc(cfg: &Config) -> Result<Output> {
    let t = timing(cfg)?;
    let (k, zeta): (f64, f64) = (cfg.get("k")?, cfg.get("zeta")?);
    let p = PenaltyParams::from_guarantee(k, zeta, t)?;
    let spread = penalty_rate_for_length(k, p.max_len, t)?;
    let e = econ(cfg)?;
    let k_max = max_penalty_ratio(
        cfg.get("h")?,
        cfg.get("alpha")?,
        &e,
        t.d,
        cfg.get("remain")?,
        cfg.get("t_tilde")?,
    );
    let k_max = match k_max {
        Ok(v) => Some(v),
        Err(griefsim::Error::Unbounded(_)) => None,
        Err(other) => return Err(other.into()),
    };
    let report = serde_json::json!({
        "k": k,
        "zeta": zeta,
        "gamma": p.gamma,
        "n_max": p.max_len,
        "gamma_spread_over_n_max": spread,
        "k_max": k_max,
    });
    let mut summary = format!(
        "gamma={:e}\nn_max={}\ngamma_spread_over_n_max={spread:e}\n",
        p.gamma, p.max_len
    );
    match k_max {
        Some(v) => writeln!(summary, "k_max={v}").unwrap(),
        None => writeln!(summary, "k_max=unbounded").unwrap(),
    }
    Ok(Output {
        summary,
        files: vec![(".json".into(), json(&report)?)],
        infeasible: None,
    })
}

#[derive(Serialize)]
struct GpZetaRow {
    k: f64,
    zeta: f64,
    gamma: f64,
    n_max: usize,
    n: usize,
    oracle: f64,
    two_n: f64,
    two_n_minus_one: f64,
    rebased: f64,
}

fn claims_check(cfg: &Config) -> Result<Output> {
    let t = timing(cfg)?;
    let gammas: Vec<f64> = cfg.list("gamma")?;
    let n: usize = cfg.get("n")?;
    if gammas.is_empty() {
        return Err(CliError::Config("key `gamma`: sweep is empty".into()));
    }
    if n < 2 {
        return Err(CliError::Config("key `n`: must be at least 2".into()));
    }
    let ns: Vec<usize> = (2..=n).collect();
    let rows = check_htlcgp(&gammas, &ns, t)?;
    let mut summary = String::new();
    for &g in &gammas {
        let sel: Vec<_> = rows.iter().filter(|r| r.gamma == g).collect();
        let lo = sel.iter().map(|r| r.oracle).fold(f64::INFINITY, f64::min);
        let hi = sel
            .iter()
            .map(|r| r.oracle)
            .fold(f64::NEG_INFINITY, f64::max);
        let err = sel.iter().map(|r| r.rel_err).fold(0.0, f64::max);
        writeln!(summary, "htlc_gp gamma={g:e}: loss {lo:.6}..{hi:.6} over n=2..{n}, worst relative error {err:.1e}").unwrap();
    }

    let grid: Vec<_> = guarantee_grid(t, &GUARANTEE_GRID)?
        .into_iter()
        .filter(|r| (2..=n).contains(&r.n_max))
        .collect();
    let points: Vec<(f64, usize)> = grid.iter().map(|r| (r.gamma, r.n_max)).collect();
    let stmt = check_gpzeta(&points, n, t, GpZetaVariant::TwoN)?;
    let proof = check_gpzeta(&points, n, t, GpZetaVariant::TwoNMinusOne)?;
    let mut zeta_rows = Vec::new();
    for ((r, s), p) in grid.iter().zip(&stmt).zip(&proof) {
        zeta_rows.push(GpZetaRow {
            k: r.k,
            zeta: r.zeta,
            gamma: r.gamma,
            n_max: r.n_max,
            n,
            oracle: loss_oracle(r.gamma, r.n_max, n, t)?,
            two_n: s.closed_form,
            two_n_minus_one: p.closed_form,
            rebased: loss_percent_gpzeta_rebased(r.gamma, r.n_max, n, t)?,
        });
    }
    let worst = |f: fn(&GpZetaRow) -> f64| {
        zeta_rows
            .iter()
            .map(|r| {
                let s = r.oracle.abs().max(f(r).abs());
                if s == 0.0 {
                    0.0
                } else {
                    (r.oracle - f(r)).abs() / s
                }
            })
            .fold(0.0, f64::max)
    };
    writeln!(
        summary,
        "htlc_gp_zeta over {} grid rows: worst relative error 2n form {:.1e}, 2n-1 form {:.1e}, rebased {:.1e}",
        zeta_rows.len(),
        worst(|r| r.two_n),
        worst(|r| r.two_n_minus_one),
        worst(|r| r.rebased)
    )
    .unwrap();
    Ok(Output {
        summary,
        files: vec![
            ("_htlcgp.csv".into(), to_csv(&rows)?),
            ("_gpzeta.csv".into(), to_csv(&zeta_rows)?),
        ],
        infeasible: None,
    })
}

fn guarantee_table(cfg: &Config) -> Result<Output> {
    let rows = guarantee_grid(timing(cfg)?, &GUARANTEE_GRID)?;
    let csv = to_csv(&rows)?;
    Ok(Output {
        summary: csv.clone(),
        files: vec![(".csv".into(), csv)],
        infeasible: None,
    })
}

fn capacity(cfg: &Config, jobs: usize) -> Result<Output> {
    let config = CapacityConfig {
        gammas: cfg.list("gammas")?,
        guarantees: pairs(cfg, "guarantees")?,
        budget: cfg.get("budget")?,
        alpha: cfg.get("alpha")?,
        n: cfg.get("n")?,
        timing: timing(cfg)?,
        setup_cost: cfg.get("setup_cost")?,
        strategy: strategy(cfg)?,
        seed: cfg.get("seed")?,
    };
    config.validate()?;
    let g = graph(cfg)?;
    let report = run_capacity_experiment(&g, &config, jobs)?;
    let mut summary = format!(
        "htlc baseline: {} instances, {} sat locked\n",
        report.baseline_instances, report.baseline_locked
    );
    for r in &report.rows {
        let grid = match (r.k, r.zeta) {
            (Some(k), Some(z)) => format!(" k={k} zeta={z}"),
            _ => String::new(),
        };
        writeln!(
            summary,
            "{} gamma={:e}{grid} n_max={}: {} instances, ratio_locked={:.4}",
            r.protocol, r.gamma, r.n_max, r.instances, r.ratio_locked
        )
        .unwrap();
    }
    Ok(Output {
        summary,
        files: vec![
            (".csv".into(), to_csv(&report.rows)?),
            (".json".into(), json(&report)?),
        ],
        infeasible: report
            .infeasible
            .then(|| "the attacker found no attack cycle on this snapshot".to_string()),
    })
}

fn success_rate(cfg: &Config, jobs: usize) -> Result<Output> {
    let config = SuccessConfig {
        gammas: cfg.list("gammas")?,
        transactions: cfg.get("transactions")?,
        kappa_min: cfg.get("kappa_min")?,
        kappa_max: cfg.get("kappa_max")?,
        alpha_min: cfg.get("alpha_min")?,
        alpha_max: cfg.get("alpha_max")?,
        timing: timing(cfg)?,
        econ: econ(cfg)?,
        seed: cfg.get("seed")?,
    };
    config.validate()?;
    let g = graph(cfg)?;
    let rows = run_success_rate(&g, &config, jobs)?;
    let mut summary = String::new();
    for r in &rows {
        writeln!(
            summary,
            "gamma={:e}: htlc {} / gp {} of {}, success_ratio={:.4}",
            r.gamma, r.htlc_success, r.gp_success, r.transactions, r.success_ratio
        )
        .unwrap();
    }
    let infeasible = rows
        .first()
        .filter(|r| r.htlc_success == 0)
        .map(|_| "no HTLC payment of the workload completed".to_string());
    Ok(Output {
        summary,
        files: vec![
            (".csv".into(), to_csv(&rows)?),
            (".json".into(), json(&rows)?),
        ],
        infeasible,
    })
}

#[derive(Serialize)]
struct TimingRow<'a> {
    requests: usize,
    protocol: Protocol,
    mode: &'a str,
    theta: Option<f64>,
    wall_ms: f64,
}

fn scalability(cfg: &Config, jobs: usize) -> Result<Output> {
    let config = ScalabilityConfig {
        counts: cfg.list("counts")?,
        protocols: cfg
            .list::<String>("protocols")?
            .iter()
            .map(|s| protocol("protocols", s))
            .collect::<Result<_>>()?,
        thetas: cfg.list("thetas")?,
        q: cfg.get("q")?,
        gamma: cfg.get("gamma")?,
        k: cfg.get("k")?,
        zeta: cfg.get("zeta")?,
        n: cfg.get("n")?,
        alpha_min: cfg.get("alpha_min")?,
        alpha_max: cfg.get("alpha_max")?,
        timing: timing(cfg)?,
        econ: econ(cfg)?,
        seed: cfg.get("seed")?,
    };
    config.validate()?;
    let g = graph(cfg)?;
    let rows = run_scalability(&g, &config, jobs)?;
    let mut summary = String::new();
    for r in &rows {
        let theta = r.theta.map_or(String::new(), |t| format!(" theta={t}"));
        writeln!(
            summary,
            "{} requests={} {}{theta}: completed={} no_route={} aborted={}",
            r.protocol, r.requests, r.mode, r.completed, r.no_route, r.aborted
        )
        .unwrap();
    }
    let timings: Vec<TimingRow> = rows
        .iter()
        .map(|r| TimingRow {
            requests: r.requests,
            protocol: r.protocol,
            mode: &r.mode,
            theta: r.theta,
            wall_ms: r.wall_ms,
        })
        .collect();
    Ok(Output {
        summary,
        files: vec![
            (".csv".into(), to_csv(&rows)?),
            (".json".into(), json(&rows)?),
            ("_timing.csv".into(), to_csv(&timings)?),
        ],
        infeasible: None,
    })
}

fn attack_trace(cfg: &Config) -> Result<Output> {
    let t = timing(cfg)?;
    let terms = match protocol("protocol", cfg.raw("protocol"))? {
        Protocol::Htlc => PenaltyTerms::None,
        Protocol::HtlcGp => {
            let g: f64 = cfg.get("gamma")?;
            if !(g >= 0.0) || !g.is_finite() {
                return Err(CliError::Config(
                    "key `gamma`: must be finite and non-negative".into(),
                ));
            }
            PenaltyTerms::Rate(g)
        }
        Protocol::HtlcGpZeta => PenaltyTerms::Guarantee(PenaltyParams::from_guarantee(
            cfg.get("k")?,
            cfg.get("zeta")?,
            t,
        )?),
    };
    let attacker = AttackerConfig {
        budget: u64::MAX,
        alpha: cfg.get("alpha")?,
        setup_cost: cfg.get("setup_cost")?,
        timing: t,
        n: cfg.get("n")?,
        strategy: strategy(cfg)?,
        ..AttackerConfig::default()
    };
    if attacker.alpha == 0 {
        return Err(CliError::Config("key `alpha`: must be positive".into()));
    }
    if attacker.n < 3 {
        return Err(CliError::Config(
            "key `n`: an attack cycle needs at least three hops".into(),
        ));
    }
    let mut g = graph(cfg)?;
    let mut rng = stream_rng(cfg.get("seed")?, 0);
    let candidates = match cfg.raw("corrupt") {
        "" => candidate_nodes(&g),
        name => vec![g.node(name)?],
    };
    let mut planned = None;
    for v in candidates {
        if let Some(inst) = plan_attack(&mut g, v, &terms, &attacker, &mut rng)? {
            planned = Some(inst);
            break;
        }
    }
    let Some(inst) = planned else {
        return Ok(Output {
            summary: String::new(),
            files: Vec::new(),
            infeasible: Some("no candidate has a feasible attack cycle".into()),
        });
    };
    let ctx = RunContext {
        econ: attacker.econ,
        policy: CheckPolicy::Altruistic,
        mu: 1,
    };
    let outcome = execute_attack(&mut g, &inst, &terms, &attacker, &ctx, &mut rng)?;
    let mut events = String::new();
    for e in &outcome.events {
        events.push_str(&serde_json::to_string(e).map_err(griefsim::Error::from)?);
        events.push('\n');
    }
    let mut line = serde_json::to_string(&outcome).map_err(griefsim::Error::from)?;
    line.push('\n');
    let summary = format!(
        "corrupt={} kappa={} payment_value={} victim_locked={} locked_blocks={} penalty_paid={} outcome={:?} events={}\n",
        outcome.corrupt,
        outcome.cycle.len() - 1,
        outcome.payment_value,
        outcome.victim_locked,
        outcome.locked_blocks,
        outcome.penalty_paid,
        outcome.outcome,
        outcome.events.len()
    );
    Ok(Output {
        summary,
        files: vec![(".jsonl".into(), line), ("_events.jsonl".into(), events)],
        infeasible: None,
    })
}
