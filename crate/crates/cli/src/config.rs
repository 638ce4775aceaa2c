//! Flat `key=value` configuration with per-subcommand key tables.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    pub default: Option<&'static str>,
    pub help: &'static str,
}

const fn key(name: &'static str, default: Option<&'static str>, help: &'static str) -> Key {
    Key {
        name,
        default,
        help,
    }
}

pub const SEED: Key = key("seed", None, "RNG seed");

pub const GRAPH: [Key; 2] = [
    key(
        "snapshot",
        None,
        "snapshot CSV/JSON path, or `synthetic` for the bundled graph",
    ),
    key("balance_mode", Some("split"), "split or unilateral"),
];

pub const TIMING: [Key; 2] = [
    key("D", Some("100"), "least HTLC timeout, blocks"),
    key(
        "delta",
        Some("100"),
        "worst-case confirmation delay, blocks",
    ),
];

pub const ECON: [Key; 5] = [
    key("base_fee", Some("1"), "flat forwarding fee, sat"),
    key("fee_rate", Some("0.000001"), "proportional forwarding fee"),
    key("per_tx_val", Some("1000"), "unit transaction size, sat"),
    key(
        "mining_fee",
        Some("154"),
        "on-chain fee to close a channel, sat",
    ),
    key("rate", Some("0.2"), "unit transaction arrivals per block"),
];

/// Keys accepted by one subcommand, in help order.
pub fn keys(sub: &str) -> Vec<Key> {
    let mut v: Vec<Key> = Vec::new();
    match sub {
        "snapshot-info" => v.extend(GRAPH),
        "route" => {
            v.extend(GRAPH);
            v.extend([
                key("src", None, "sender node name"),
                key("dst", None, "payee node name"),
                key("amount", None, "amount delivered to the payee, sat"),
                key("n", Some("20"), "maximum path length"),
            ]);
            v.extend(TIMING);
            v.extend(ECON);
        }
        "game-sweep" => {
            v.extend([
                key(
                    "protocols",
                    Some("htlc,htlc_gp"),
                    "comma list of htlc, htlc_gp",
                ),
                key("theta_min", Some("0"), "first belief"),
                key("theta_max", Some("1"), "last belief"),
                key("theta_steps", Some("1000"), "belief intervals"),
                key(
                    "amounts",
                    Some("15000,30000,45000,60000"),
                    "comma list of hop amounts, sat",
                ),
                key(
                    "rates",
                    Some("0.1,0.2,0.3,0.4"),
                    "comma list of arrival rates",
                ),
                key(
                    "q",
                    Some("0.7"),
                    "probability a corrupt HTLC payee waits instead of griefing",
                ),
                key("gamma", Some("0.00001"), "HTLC-GP penalty rate per block"),
                key("n", Some("20"), "maximum path length"),
                key(
                    "kappa",
                    Some("20"),
                    "length of the route holding the game hop",
                ),
                key(
                    "remain_fwd",
                    Some("0"),
                    "first mover's idle forward balance, sat",
                ),
                key(
                    "remain_bwd",
                    Some("0"),
                    "second mover's idle backward balance, sat",
                ),
                key(
                    "t_tilde",
                    Some("1000000"),
                    "channel lifetime left after expiry, blocks",
                ),
                key("setup_cost", Some("0"), "channel setup cost, sat"),
            ]);
            v.extend(TIMING);
            v.extend(ECON.iter().copied().filter(|k| k.name != "rate"));
        }
        "penalty-calc" => {
            v.extend([
                key(
                    "k",
                    Some("0.25"),
                    "maximum penalty as a fraction of the amount",
                ),
                key(
                    "zeta",
                    Some("0.025"),
                    "guaranteed minimum compensation fraction",
                ),
                key(
                    "h",
                    Some("0.9"),
                    "payee liveness, for the largest affordable k",
                ),
                key("alpha", Some("15000"), "payment amount, sat"),
                key("remain", Some("0"), "payee idle balance, sat"),
                key(
                    "t_tilde",
                    Some("1000000"),
                    "channel lifetime left after expiry, blocks",
                ),
            ]);
            v.extend(TIMING);
            v.extend(ECON);
        }
        "claims-check" => {
            v.extend([
                key(
                    "gamma",
                    Some("0.0000001,0.000001,0.00001,0.0001,0.001"),
                    "comma list of HTLC-GP rates",
                ),
                key("n", Some("20"), "attack path length"),
            ]);
            v.extend(TIMING);
        }
        "table2" => v.extend(TIMING),
        "capacity" => {
            v.extend(GRAPH);
            v.extend([
                key(
                    "gammas",
                    Some("0.0000001,0.000001,0.00001,0.0001,0.001"),
                    "comma list of HTLC-GP rates",
                ),
                key(
                    "guarantees",
                    Some("0.25:0.025"),
                    "comma list of k:zeta pairs",
                ),
                key("budget", Some("10000000"), "attacker budget, sat"),
                key(
                    "alpha",
                    Some("100000"),
                    "value each corrupt node routes, sat",
                ),
                key("n", Some("20"), "maximum path length"),
                key("setup_cost", Some("0"), "channel setup cost, sat"),
                key("strategy", Some("wait_reject"), "wait_reject or grief"),
            ]);
            v.extend(TIMING);
            v.push(SEED);
        }
        "success-rate" => {
            v.extend(GRAPH);
            v.extend([
                key(
                    "gammas",
                    Some("0,0.0000001,0.000001,0.00001,0.0001,0.001"),
                    "comma list of HTLC-GP rates",
                ),
                key("transactions", Some("3000"), "payments in the workload"),
                key("kappa_min", Some("5"), "shortest walk, hops"),
                key("kappa_max", Some("20"), "longest walk, hops"),
                key("alpha_min", Some("10000"), "smallest amount, sat"),
                key("alpha_max", Some("100000"), "largest amount, sat"),
            ]);
            v.extend(TIMING);
            v.extend(ECON);
            v.push(SEED);
        }
        "scalability" => {
            v.extend(GRAPH);
            v.extend([
                key("counts", Some("100,1000,5000"), "comma list of batch sizes"),
                key(
                    "protocols",
                    Some("htlc,htlc_gp,htlc_gp_zeta"),
                    "comma list of protocols",
                ),
                key(
                    "thetas",
                    Some("0.05,0.5"),
                    "comma list of beliefs for rational mode",
                ),
                key(
                    "q",
                    Some("0.7"),
                    "probability a corrupt HTLC payee waits instead of griefing",
                ),
                key("gamma", Some("0.00001"), "HTLC-GP penalty rate per block"),
                key("k", Some("0.25"), "HTLC-GP-zeta penalty cap"),
                key("zeta", Some("0.025"), "HTLC-GP-zeta minimum compensation"),
                key("n", Some("20"), "maximum path length"),
                key("alpha_min", Some("10000"), "smallest amount, sat"),
                key("alpha_max", Some("100000"), "largest amount, sat"),
            ]);
            v.extend(TIMING);
            v.extend(ECON);
            v.push(SEED);
        }
        "attack-trace" => {
            v.extend(GRAPH);
            v.extend([
                key("protocol", Some("htlc_gp"), "htlc, htlc_gp or htlc_gp_zeta"),
                key("gamma", Some("0.00001"), "HTLC-GP penalty rate per block"),
                key("k", Some("0.25"), "HTLC-GP-zeta penalty cap"),
                key("zeta", Some("0.025"), "HTLC-GP-zeta minimum compensation"),
                key(
                    "corrupt",
                    Some(""),
                    "corrupt node name; empty picks the first feasible candidate",
                ),
                key(
                    "alpha",
                    Some("100000"),
                    "value the corrupt node routes, sat",
                ),
                key("n", Some("20"), "maximum path length"),
                key("setup_cost", Some("0"), "channel setup cost, sat"),
                key("strategy", Some("wait_reject"), "wait_reject or grief"),
            ]);
            v.extend(TIMING);
            v.push(SEED);
        }
        _ => {}
    }
    v
}

/// Resolved `key -> value` for one subcommand.
#[derive(Debug, Clone)]
pub struct Config {
    sub: &'static str,
    order: Vec<Key>,
    values: BTreeMap<&'static str, String>,
}

impl Config {
    pub fn new(sub: &'static str) -> Self {
        let order = keys(sub);
        let values = order
            .iter()
            .filter_map(|k| k.default.map(|d| (k.name, d.to_string())))
            .collect();
        Self { sub, order, values }
    }

    fn lookup(&self, name: &str) -> Option<&'static str> {
        self.order.iter().find(|k| k.name == name).map(|k| k.name)
    }

    pub fn set(&mut self, name: &str, value: &str) -> Result<(), CliError> {
        let Some(k) = self.lookup(name) else {
            return Err(CliError::Config(format!(
                "unknown key `{name}` for `{}`",
                self.sub
            )));
        };
        self.values.insert(k, value.trim().to_string());
        Ok(())
    }

    /// Applies `key=value` lines. Blank lines and `#` comments are skipped.
    pub fn load_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("{}:{}: expected key=value", path.display(), i + 1))
            })?;
            self.set(k.trim(), v)
                .map_err(|e| CliError::Config(format!("{}:{}: {e}", path.display(), i + 1)))?;
        }
        Ok(())
    }

    /// Applies one `key=value` override.
    pub fn apply_pair(&mut self, pair: &str) -> Result<(), CliError> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override `{pair}` is not key=value")))?;
        self.set(k.trim(), v)
    }

    /// Fails on any key still lacking a value.
    pub fn require_all(&self) -> Result<(), CliError> {
        for k in &self.order {
            if !self.values.contains_key(k.name) {
                return Err(CliError::Config(format!(
                    "missing required key `{}`",
                    k.name
                )));
            }
        }
        Ok(())
    }

    pub fn raw(&self, name: &str) -> &str {
        self.values.get(name).map(String::as_str).unwrap_or("")
    }

    pub fn get<T: FromStr>(&self, name: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(name);
        raw.parse()
            .map_err(|e| CliError::Config(format!("key `{name}`: cannot parse `{raw}`: {e}")))
    }

    pub fn list<T: FromStr>(&self, name: &str) -> Result<Vec<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.raw(name);
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|e| CliError::Config(format!("key `{name}`: cannot parse `{s}`: {e}")))
            })
            .collect()
    }

    /// Resolved configuration as `key=value` lines in table order.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for k in &self.order {
            if let Some(v) = self.values.get(k.name) {
                out.push_str(&format!("{}={v}\n", k.name));
            }
        }
        out
    }
}
