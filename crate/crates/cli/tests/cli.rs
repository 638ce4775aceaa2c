use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn griefsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_griefsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

const SMALL: &str = "src,dst,capacity_sat\na,b,1000000\nb,c,1001\nc,d,800000\nd,a,600000\n";

#[test]
fn penalty_calc_reproduces_grid_row() {
    let o = griefsim(&[
        "penalty-calc",
        "--k",
        "0.005",
        "--zeta",
        "0.00025",
        "--D",
        "100",
        "--delta",
        "100",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let gamma: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("gamma="))
        .expect("gamma line")
        .parse()
        .unwrap();
    assert!((gamma - 2.4e-7).abs() / 2.4e-7 < 0.05, "{gamma}");
    assert!(text.contains("n_max=20\n"));
}

#[test]
fn zero_rate_has_zero_loss() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = griefsim(&["claims-check", "--gamma", "0", "--out", out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = read(dir.path(), "claims-check_htlcgp.csv");
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "oracle").unwrap();
    let mut rows = 0;
    for l in lines {
        let v: f64 = l.split(',').nth(col).unwrap().parse().unwrap();
        assert_eq!(v, 0.0);
        rows += 1;
    }
    assert_eq!(rows, 19);
}

#[test]
fn missing_snapshot_is_a_config_error() {
    let o = griefsim(&["capacity", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("snapshot"), "{}", stderr(&o));

    let o = griefsim(&[
        "capacity",
        "--seed",
        "1",
        "--snapshot",
        "/nonexistent/graph.csv",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("snapshot"));
}

#[test]
fn experiments_need_a_seed() {
    for sub in ["capacity", "success-rate", "scalability", "attack-trace"] {
        let o = griefsim(&[sub, "--snapshot", "synthetic"]);
        assert_eq!(o.status.code(), Some(2), "{sub}");
        assert!(stderr(&o).contains("`seed`"), "{sub}: {}", stderr(&o));
    }
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# comment\nD = 100\nwidth = 3\n").unwrap();
    let o = griefsim(&["table2", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("width"));

    let o = griefsim(&["table2", "--set", "width=3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("width"));

    let o = griefsim(&["penalty-calc", "--zeta", "abc"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("zeta"));
}

#[test]
fn command_line_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "k=0.5\nzeta=0.05\nD=200\n").unwrap();
    let out = dir.path().join("out");
    let o = griefsim(&[
        "penalty-calc",
        "--config",
        cfg.to_str().unwrap(),
        "--D",
        "100",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let resolved = read(&out, "penalty-calc_config.txt");
    assert!(resolved.contains("k=0.5\n"));
    assert!(resolved.contains("D=100\n"));
    let report: serde_json::Value = serde_json::from_str(&read(&out, "penalty-calc.json")).unwrap();
    assert_eq!(report["n_max"], 10);
}

#[test]
fn infeasible_route_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("g.csv");
    fs::write(&snap, SMALL).unwrap();
    let s = snap.to_str().unwrap();
    let o = griefsim(&[
        "route",
        "--snapshot",
        s,
        "--src",
        "a",
        "--dst",
        "c",
        "--amount",
        "50000000",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));

    let o = griefsim(&[
        "route",
        "--snapshot",
        s,
        "--src",
        "a",
        "--dst",
        "c",
        "--amount",
        "1000",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("a -> d -> c\n"), "{}", stdout(&o));

    let o = griefsim(&[
        "route",
        "--snapshot",
        s,
        "--src",
        "a",
        "--dst",
        "zz",
        "--amount",
        "1000",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn snapshot_info_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("g.csv");
    fs::write(&snap, SMALL).unwrap();
    let out = dir.path().join("out");
    let o = griefsim(&[
        "snapshot-info",
        "--snapshot",
        snap.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("channels=4"));
    let emitted = read(&out, "snapshot-info_snapshot.csv");
    let leading: Vec<String> = emitted
        .lines()
        .map(|l| l.split(',').take(3).collect::<Vec<_>>().join(","))
        .collect();
    assert_eq!(leading.join("\n") + "\n", SMALL);

    let json = dir.path().join("g.json");
    fs::write(
        &json,
        r#"[{"src":"a","dst":"b","capacity_sat":10},{"src":"a","dst":"b","capacity_sat":5}]"#,
    )
    .unwrap();
    let o = griefsim(&["snapshot-info", "--snapshot", json.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("duplicate"));
}

#[test]
fn attack_trace_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = griefsim(&[
            "attack-trace",
            "--snapshot",
            "synthetic",
            "--seed",
            "11",
            "--protocol",
            "htlc_gp_zeta",
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let events = read(a.path(), "attack-trace_events.jsonl");
    assert_eq!(events, read(b.path(), "attack-trace_events.jsonl"));
    assert_eq!(
        read(a.path(), "attack-trace.jsonl"),
        read(b.path(), "attack-trace.jsonl")
    );
    for line in events.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        for key in [
            "block",
            "channel",
            "kind",
            "party",
            "amount_sat",
            "contract_id",
        ] {
            assert!(v.get(key).is_some(), "{key} missing in {line}");
        }
    }
}

#[test]
fn game_sweep_writes_plot_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = griefsim(&[
        "game-sweep",
        "--amounts",
        "15000",
        "--rates",
        "0.2",
        "--theta_steps",
        "100",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = read(dir.path(), "game-sweep.csv");
    assert_eq!(
        csv.lines().next().unwrap(),
        "theta,protocol,amount,rate,E_first,E_second_uncorrupt,E_second_corrupt,decision,e_forward"
    );
    assert_eq!(csv.lines().count(), 1 + 2 * 101);
    let flips: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "game-sweep_flips.json")).unwrap();
    assert_eq!(flips.as_array().unwrap().len(), 2);
}

#[test]
fn scalability_keeps_timing_apart() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = dir.path().join(sub);
        let o = griefsim(&[
            "scalability",
            "--snapshot",
            "synthetic",
            "--seed",
            "5",
            "--counts",
            "50",
            "--jobs",
            "2",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        out
    };
    let (x, y) = (run("x"), run("y"));
    assert_eq!(read(&x, "scalability.csv"), read(&y, "scalability.csv"));
    assert!(!read(&x, "scalability.csv").contains("wall_ms"));
    assert!(
        read(&x, "scalability_timing.csv").starts_with("requests,protocol,mode,theta,wall_ms\n")
    );
}

#[test]
fn help_lists_every_key() {
    let subs = [
        ("snapshot-info", &["snapshot", "balance_mode"][..]),
        (
            "route",
            &["src", "dst", "amount", "n", "D", "delta", "mining_fee"][..],
        ),
        (
            "game-sweep",
            &["theta_min", "amounts", "rates", "q", "gamma", "per_tx_val"][..],
        ),
        ("penalty-calc", &["k", "zeta", "h", "D", "delta"][..]),
        ("claims-check", &["gamma", "n"][..]),
        ("table2", &["D", "delta"][..]),
        (
            "capacity",
            &[
                "snapshot",
                "gammas",
                "guarantees",
                "budget",
                "alpha",
                "seed",
            ][..],
        ),
        (
            "success-rate",
            &["gammas", "transactions", "kappa_min", "seed"][..],
        ),
        (
            "scalability",
            &["counts", "protocols", "thetas", "seed"][..],
        ),
        (
            "attack-trace",
            &["protocol", "corrupt", "strategy", "seed"][..],
        ),
    ];
    for (sub, keys) in subs {
        let o = griefsim(&[sub, "--help"]);
        assert!(o.status.success());
        let text = stdout(&o);
        for k in keys {
            assert!(
                text.contains(&format!("--{k} <VALUE>")),
                "{sub} help lacks {k}"
            );
        }
    }
}
