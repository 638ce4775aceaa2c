//! `griefsim` command-line driver.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{value_parser, Arg, ArgAction, ArgMatches, Command};

use config::Config;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Core(griefsim::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl From<griefsim::Error> for CliError {
    fn from(e: griefsim::Error) -> Self {
        use griefsim::Error as E;
        match e {
            E::InvalidParam { .. }
            | E::Parse { .. }
            | E::DuplicateEdge { .. }
            | E::UnknownNode(_)
            | E::Unbounded(_) => CliError::Config(e.to_string()),
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}

/// What a subcommand produced.
#[derive(Debug, Default)]
pub struct Output {
    /// Printed to stdout.
    pub summary: String,
    /// `(suffix, contents)`; written as `<subcommand><suffix>` under `--out`.
    pub files: Vec<(String, String)>,
    /// Set when the run finished but the experiment could not be carried out.
    pub infeasible: Option<String>,
}

const SUBCOMMANDS: [(&str, &str); 10] = [
    (
        "snapshot-info",
        "Summarise a channel snapshot and re-emit it as CSV",
    ),
    ("route", "Find the shortest feasible route for one payment"),
    (
        "game-sweep",
        "Expected payoffs of the forwarding game over beliefs",
    ),
    (
        "penalty-calc",
        "Penalty rate, path cap and largest affordable penalty ratio",
    ),
    (
        "claims-check",
        "Loss-percent closed forms against direct accounting",
    ),
    (
        "table2",
        "Penalty rate and path cap over the built-in (k, zeta) grid",
    ),
    ("capacity", "Victim capacity locked by a budgeted attacker"),
    (
        "success-rate",
        "Share of honest payments completing under HTLC-GP vs HTLC",
    ),
    (
        "scalability",
        "Completed payments per protocol over growing batches",
    ),
    ("attack-trace", "One attack instance with its full ledger"),
];

fn command() -> Command {
    let mut root = Command::new("griefsim")
        .about("Payment-channel griefing simulator")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true);
    for (name, about) in SUBCOMMANDS {
        let mut sc = Command::new(name)
            .about(about)
            .arg(
                Arg::new("config")
                    .long("config")
                    .value_name("FILE")
                    .help("key=value file; command-line values take precedence"),
            )
            .arg(
                Arg::new("set")
                    .long("set")
                    .value_name("KEY=VALUE")
                    .action(ArgAction::Append)
                    .help("override one key (repeatable)"),
            )
            .arg(
                Arg::new("out")
                    .long("out")
                    .value_name("DIR")
                    .value_parser(value_parser!(PathBuf))
                    .help("write the resolved config and reports here"),
            )
            .arg(
                Arg::new("jobs")
                    .long("jobs")
                    .value_name("N")
                    .value_parser(value_parser!(usize))
                    .default_value("1")
                    .help("worker threads for sweeps"),
            )
            .next_help_heading("Keys");
        for k in config::keys(name) {
            let help = match k.default {
                Some("") => format!("{} [default: empty]", k.help),
                Some(d) => format!("{} [default: {d}]", k.help),
                None => format!("{} [required]", k.help),
            };
            sc = sc.arg(Arg::new(k.name).long(k.name).value_name("VALUE").help(help));
        }
        root = root.subcommand(sc);
    }
    root
}

fn resolve(name: &'static str, m: &ArgMatches) -> Result<Config, CliError> {
    let mut cfg = Config::new(name);
    if let Some(path) = m.get_one::<String>("config") {
        cfg.load_file(path.as_ref())?;
    }
    if let Some(pairs) = m.get_many::<String>("set") {
        for p in pairs {
            cfg.apply_pair(p)?;
        }
    }
    for k in config::keys(name) {
        if let Some(v) = m.get_one::<String>(k.name) {
            cfg.set(k.name, v)?;
        }
    }
    cfg.require_all()?;
    Ok(cfg)
}

fn run(name: &'static str, m: &ArgMatches) -> Result<Option<String>, CliError> {
    let cfg = resolve(name, m)?;
    let jobs = (*m.get_one::<usize>("jobs").expect("defaulted")).max(1);
    let out = commands::dispatch(name, &cfg, jobs)?;
    if let Some(dir) = m.get_one::<PathBuf>("out") {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{name}_config.txt")), cfg.render())?;
        for (suffix, body) in &out.files {
            std::fs::write(dir.join(format!("{name}{suffix}")), body)?;
        }
    }
    print!("{}", out.summary);
    Ok(out.infeasible)
}

fn main() -> ExitCode {
    let matches = command().try_get_matches().unwrap_or_else(|e| e.exit());
    let (sub, m) = matches.subcommand().expect("subcommand required");
    let name = SUBCOMMANDS
        .iter()
        .map(|s| s.0)
        .find(|s| *s == sub)
        .expect("registered subcommand");
    match run(name, m) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(why)) => {
            eprintln!("infeasible: {why}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
