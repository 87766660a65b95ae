use std::fs;
use std::path::Path;

use squid::bench::{main_with_args, CSV_HEADER};

fn run(args: &[&str], out: &Path) -> (i32, String) {
    let mut argv = vec!["squid-bench"];
    argv.extend_from_slice(args);
    let o = out.to_str().unwrap();
    argv.extend_from_slice(&["--out", o]);
    let code = main_with_args(argv);
    (code, fs::read_to_string(out).unwrap_or_default())
}

/// Drops the two timing columns.
fn stable(csv: &str) -> Vec<String> {
    csv.lines()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            f.iter()
                .enumerate()
                .filter(|(i, _)| *i != 9 && *i != 16)
                .map(|(_, s)| *s)
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect()
}

#[test]
fn every_subcommand_writes_the_golden_header() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 8] = [
        &["qmax-bench", "--q", "1000", "--n", "20000", "--verify"],
        &["qmax-bench", "--app", "ps", "--q", "200", "--n", "20000", "--verify"],
        &["qmax-bench", "--app", "nwhh", "--q", "200", "--n", "20000", "--verify"],
        &["hh-bench", "--algo", "smed-random", "--epsilon", "0.01", "--n", "20000"],
        &["lrfu-bench", "--q", "512", "--n", "20000"],
        &["p4-sim", "--c", "256", "--n", "50000", "--universe", "20000", "--compare"],
        &["tune-alpha", "--Z", "760", "--gamma", "1"],
        &["theorem-check", "--q", "200", "--trials", "200"],
    ];
    for (i, args) in cases.iter().enumerate() {
        let out = dir.path().join(format!("{i}.csv"));
        let (code, csv) = run(args, &out);
        assert_eq!(code, 0, "{args:?}");
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER), "{args:?}");
        assert!(lines.next().is_some(), "{args:?} wrote no rows");
    }
}

#[test]
fn fixed_seed_gives_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["hh-bench", "--epsilon", "0.01", "--n", "30000", "--seed", "7"][..],
        &["lrfu-bench", "--engine", "squid", "--q", "256", "--n", "30000", "--seed", "7"][..],
        &["p4-sim", "--c", "128", "--n", "40000", "--universe", "10000", "--seed", "7"][..],
    ] {
        let (_, a) = run(args, &dir.path().join("a.csv"));
        let (_, b) = run(args, &dir.path().join("b.csv"));
        assert_eq!(stable(&a), stable(&b), "{args:?}");
        assert!(a.contains(",7,"), "seed is embedded");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    assert_eq!(run(&["qmax-bench", "--gamma", "-1"], &out).0, 2);
    assert_eq!(run(&["hh-bench", "--algo", "nope"], &out).0, 2);
    assert_eq!(run(&["lrfu-bench", "--engine", "lru"], &out).0, 2);
    assert_eq!(run(&["theorem-check", "--trials", "0"], &out).0, 2);
    // a missing input file is a runtime failure, not a usage error
    assert_eq!(run(&["hh-bench", "--input", "/nonexistent.csv"], &out).0, 1);
    // the failure rate sits far below δ = 0.5
    assert_eq!(run(&["theorem-check", "--q", "100", "--delta", "0.5", "--trials", "100"], &out).0, 0);
}
