//! Driver-level behavior: argument validation, exit codes, CSV shape, and
//! table summaries.

use std::process::Command;

use spanlab_cli::{cmd_lowerbound, cmd_run, cmd_table, Cli, Command as Cmd};

use clap::Parser;

fn parse(args: &[&str]) -> Cli {
    Cli::parse_from(std::iter::once("spanlab").chain(args.iter().copied()))
}

fn run_args(args: &[&str]) -> spanlab_cli::RunArgs {
    match parse(args).command {
        Cmd::Run(a) => a,
        _ => panic!("expected run"),
    }
}

fn lb_args(args: &[&str]) -> spanlab_cli::LowerboundArgs {
    match parse(args).command {
        Cmd::Lowerbound(a) => a,
        _ => panic!("expected lowerbound"),
    }
}

#[test]
fn run_emits_one_row_per_repetition() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rows.csv");
    let args = run_args(&[
        "run",
        "--algo",
        "2p",
        "--gnp",
        "300,0.05",
        "--pairs",
        "random:50",
        "--c",
        "3",
        "--seed",
        "1",
        "--reps",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    let outcome = cmd_run(&args).unwrap();
    assert_eq!(outcome.rows, 5);
    assert!(!outcome.failed());
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6); // header + 5 rows
    assert!(lines[0].starts_with("algo,n,D,param,edges,ratio_size,rounds"));
    for row in &lines[1..] {
        assert_eq!(row.split(',').count(), 11);
        assert!(row.starts_with("2p,300,"));
    }
}

#[test]
fn mismatched_inputs_are_usage_errors() {
    let args = run_args(&[
        "run", "--algo", "2s", "--gnp", "50,0.2", "--pairs", "random:5",
    ]);
    let err = cmd_run(&args).unwrap_err();
    assert!(err.to_string().contains("--sources"), "{err}");

    let args = run_args(&[
        "run",
        "--algo",
        "4ap",
        "--gnp",
        "50,0.2",
        "--sources",
        "random:5",
    ]);
    let err = cmd_run(&args).unwrap_err();
    assert!(err.to_string().contains("does not take"), "{err}");

    let args = run_args(&[
        "run", "--algo", "2p", "--gnp", "50,0.2", "--pairs", "random:5", "--reps", "0",
    ]);
    let err = cmd_run(&args).unwrap_err();
    assert!(err.to_string().contains("reps"), "{err}");

    let args = run_args(&["run", "--algo", "9z", "--gnp", "50,0.2"]);
    assert!(cmd_run(&args).is_err());

    let args = run_args(&["run", "--algo", "4ap"]);
    let err = cmd_run(&args).unwrap_err();
    assert!(err.to_string().contains("graph source"), "{err}");
}

#[test]
fn lowerbound_p_boundary() {
    // m = 21 at q = 2, so p = 7 is the last accepted value.
    let ok = lb_args(&["lowerbound", "--q", "2", "--p", "7", "--seed", "1"]);
    let outcome = cmd_lowerbound(&ok).unwrap();
    assert_eq!(outcome.rows, 1);

    let over = lb_args(&["lowerbound", "--q", "2", "--p", "8", "--seed", "1"]);
    let err = cmd_lowerbound(&over).unwrap_err();
    assert!(err.to_string().contains("m/3"), "{err}");
}

#[test]
fn timeout_drives_nonzero_exit() {
    let bin = env!("CARGO_BIN_EXE_spanlab");
    let status = Command::new(bin)
        .args([
            "run",
            "--algo",
            "4ap",
            "--gnp",
            "60,0.2",
            "--seed",
            "1",
            "--max-rounds",
            "1",
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn successful_run_exits_zero() {
    let bin = env!("CARGO_BIN_EXE_spanlab");
    let out = Command::new(bin)
        .args(["run", "--algo", "4ap", "--gnp", "60,0.2", "--seed", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn table_groups_by_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.csv");
    std::fs::write(
        &one,
        "algo,n,D,param,edges,ratio_size,rounds,ratio_rounds,max_excess,violations,seed\n\
         2p,100,5,50,400,0.25,80,1.5,0,0,7\n",
    )
    .unwrap();
    let table = cmd_table(&spanlab_cli::TableArgs {
        files: vec![one.clone()],
    })
    .unwrap();
    assert_eq!(table.lines().count(), 3); // header, separator, one algo row
    assert!(table.contains("| 2p | 1 | 0.2500 | 1.5000 |"));

    let mixed = dir.path().join("mixed.csv");
    std::fs::write(
        &mixed,
        "2p,100,5,50,400,0.25,80,1.5,0,0,7\n\
         2p,100,5,50,420,0.35,90,2.5,0,0,8\n\
         4ap,100,5,0,900,0.5,200,4.0,1,0,9\n",
    )
    .unwrap();
    let table = cmd_table(&spanlab_cli::TableArgs { files: vec![mixed] }).unwrap();
    assert!(table.contains("| 2p | 2 | 0.3000 | 2.0000 |"), "{table}");
    assert!(table.contains("| 4ap | 1 | 0.5000 | 4.0000 |"), "{table}");

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    assert!(cmd_table(&spanlab_cli::TableArgs { files: vec![empty] }).is_err());
    assert!(cmd_table(&spanlab_cli::TableArgs { files: vec![] }).is_err());
}
