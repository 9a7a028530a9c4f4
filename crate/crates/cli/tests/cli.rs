//! Drives the `masslab` binary and the library entry points behind it.

use masslab_cli::commands::{solve, solve_file};
use masslab_cli::config::{load, FracRunConfig, SolveConfig};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_masslab")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

#[test]
fn exponents_examples() {
    let o = bin(&["exponents", "--family", "pme", "--m", "2", "--N", "1"]);
    assert!(o.status.success());
    let row = stdout(&o).lines().nth(1).unwrap().to_string();
    assert!(row.contains("0.333333,0.333333,Slow,true"), "{row}");

    let o = bin(&["exponents", "--family", "ple", "--N", "2", "--p", "1.2"]);
    assert!(stdout(&o).contains("VeryFast,false"));

    let o = bin(&["exponents", "--family", "dnle", "--m", "0.5", "--p", "1.5", "--N", "4"]);
    assert!(stdout(&o).contains("no finite-mass self-similar solution"));
}

#[test]
fn exit_codes() {
    assert_eq!(bin(&["exponents", "--family", "pme", "--m", "-1", "--N", "3"]).status.code(), Some(1));
    assert_eq!(bin(&["exponents", "--family", "nope"]).status.code(), Some(1));
    assert_eq!(bin(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(bin(&["verify", "fast", "--ids", "1,3"]).status.code(), Some(0));
    assert_eq!(bin(&["verify", "fast", "--ids", "12"]).status.code(), Some(1));
}

#[test]
fn every_shipped_config_parses() {
    for name in ["barenblatt_pme", "logdiff_8pi", "fde_dichotomy"] {
        load::<SolveConfig>(&configs().join(format!("{name}.toml"))).unwrap();
    }
    load::<FracRunConfig>(&configs().join("frac_fhe.toml")).unwrap();
}

#[test]
fn barenblatt_run_is_conservative_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let path = configs().join("barenblatt_pme.toml");
    let (a, rows) = solve_file(&path, Some(dir.path())).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].loss_frac.abs() < 1e-8);
    assert!(rows[0].l1_final < 0.02);
    let ledger = std::fs::read_to_string(a.dir.join("ledger_run.csv")).unwrap();
    assert!(ledger.contains(&format!("# config_hash: {}", a.hash)));
    let first = std::fs::read(a.dir.join("summary.csv")).unwrap();
    let (b, _) = solve_file(&path, Some(dir.path())).unwrap();
    assert_eq!(a.dir, b.dir);
    assert_eq!(first, std::fs::read(b.dir.join("summary.csv")).unwrap());
}

#[test]
fn logdiff_config_reports_the_loss_rate() {
    let dir = tempfile::tempdir().unwrap();
    let (_, rows) = solve_file(&configs().join("logdiff_8pi.toml"), Some(dir.path())).unwrap();
    let rate = rows[0].loss_rate;
    assert!((rate / (-8.0 * std::f64::consts::PI) - 1.0).abs() < 0.02, "{rate}");
}

#[test]
fn sweep_results_do_not_depend_on_the_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg: SolveConfig = load(&configs().join("fde_dichotomy.toml")).unwrap();
    cfg.solver.checkpoints = vec![0.05, 0.1];
    cfg.output.profiles = false;
    let sweep = cfg.sweep.as_mut().unwrap();
    sweep.radius = Some(vec![10.0, 20.0]);
    sweep.workers = Some(1);
    let (one, rows) = solve(&cfg, Some(dir.path())).unwrap();
    let labels: Vec<&str> = rows.iter().map(|r| r.label.as_str()).collect();
    assert_eq!(labels, ["m0.5_R10", "m0.5_R20", "m0.2_R10", "m0.2_R20"]);

    cfg.sweep.as_mut().unwrap().workers = Some(3);
    let (three, _) = solve(&cfg, Some(dir.path())).unwrap();
    // the worker count is part of the config, hence of the hash, but not of the numbers
    assert_ne!(one.hash, three.hash);
    let body = |p: &Path| -> String {
        std::fs::read_to_string(p.join("summary.csv")).unwrap().lines().filter(|l| !l.starts_with('#')).collect()
    };
    assert_eq!(body(&one.dir), body(&three.dir));
}

#[test]
fn unknown_config_keys_are_rejected_with_a_position() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("barenblatt_pme.toml")).unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, text.replace("cells = 400", "cells = 400\nspacing = 0.01")).unwrap();
    let o = bin(&["solve", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("spacing") && err.contains("line"), "{err}");
}

#[test]
fn frac_scan_and_plot_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cfg = configs().join("frac_fhe.toml");
    let o = bin(&["frac", "run", cfg.to_str().unwrap(), "--out", out]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let o = bin(&["scan", "--family", "pme", "--N", "3", "--halvings", "3", "--out", out]);
    assert!(o.status.success());
    let csv = stdout(&o).lines().find_map(|l| l.strip_prefix("wrote ").map(PathBuf::from)).unwrap();
    assert!(std::fs::read_to_string(&csv).unwrap().contains("eps,C,K,d,outer_mass_frac,ln_C,ln_K,flags"));

    let svg = dir.path().join("scan.svg");
    let o = bin(&["plot", csv.to_str().unwrap(), "--x", "eps", "--y", "ln_C", "--logx", "-o", svg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<polyline"));
}
