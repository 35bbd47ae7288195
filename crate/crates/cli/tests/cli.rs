use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lorank(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lorank")).args(args).output().expect("spawn lorank")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

const TRIANGLE: &str = "\
\"MaxCut of a unit triangle, maximise <L/4, X>\"
3
1
3
1 1 1
0 1 1 1 0.5
0 1 1 2 -0.25
0 1 1 3 -0.25
0 1 2 2 0.5
0 1 2 3 -0.25
0 1 3 3 0.5
1 1 1 1 1
2 1 2 2 1
3 1 3 3 1
";

#[test]
fn solve_triangle_writes_csv_and_factor() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("tri.dat-s");
    fs::write(&input, TRIANGLE).unwrap();
    let csv = dir.path().join("report.csv");
    let factor = dir.path().join("U.txt");
    let out = lorank(&[
        "solve",
        path_str(&input),
        "--out",
        path_str(&csv),
        "--factor-out",
        path_str(&factor),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), row.len());
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    let obj: f64 = col("objective").parse().unwrap();
    assert!((obj - 2.25).abs() < 1e-3, "objective {obj}");
    assert_eq!(col("status"), "converged");

    let u = lorank::io::report::read_factor(&factor).unwrap();
    assert_eq!(u.rows(), 3);
}

#[test]
fn iteration_cap_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("g.dat-s");
    let gen = lorank(&["gen", "maxcut", "--nodes", "40", "--seed", "3", "-o", path_str(&input)]);
    assert_eq!(gen.status.code(), Some(0));
    let out = lorank(&["solve", path_str(&input), "--admm-cap", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stdout).contains("iter_cap"));
}

#[test]
fn errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.dat-s");
    assert_eq!(lorank(&["solve", path_str(&missing)]).status.code(), Some(1));

    let bad = dir.path().join("bad.dat-s");
    fs::write(&bad, "3\n1\nnot a block size\n").unwrap();
    assert_eq!(lorank(&["solve", path_str(&bad)]).status.code(), Some(1));

    let input = dir.path().join("tri.dat-s");
    fs::write(&input, TRIANGLE).unwrap();
    assert_eq!(lorank(&["solve", path_str(&input), "--gamma", "-3"]).status.code(), Some(1));
    assert_eq!(lorank(&["solve", path_str(&input), "--rank", "zero"]).status.code(), Some(1));
    assert_eq!(lorank(&["solve", path_str(&input), "--eps", "-1"]).status.code(), Some(1));
}

#[test]
fn gen_mc_round_trips_through_parser() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mc.dat-s");
    let gen = lorank(&["gen", "mc", "--p", "12", "--q", "9", "--rank", "2", "--fraction", "0.5", "-o", path_str(&out)]);
    assert_eq!(gen.status.code(), Some(0));
    let p = lorank::io::read_sdpa_file(&out).unwrap();
    assert_eq!(p.n(), 21);
    assert_eq!(p.m(), 54);
}

#[test]
fn gen_maxcut_from_gset_file() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.txt");
    fs::write(&graph, "4 4\n1 2 1\n2 3 1\n3 4 1\n4 1 1\n").unwrap();
    let out = dir.path().join("g.dat-s");
    let gen = lorank(&["gen", "maxcut", "--graph", path_str(&graph), "-o", path_str(&out)]);
    assert_eq!(gen.status.code(), Some(0), "{}", String::from_utf8_lossy(&gen.stderr));
    let p = lorank::io::read_sdpa_file(&out).unwrap();
    assert_eq!((p.n(), p.m()), (4, 4));
}

#[test]
fn bench_reports_every_entry_and_sgm() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("tri.dat-s"), TRIANGLE).unwrap();
    let manifest = dir.path().join("manifest.txt");
    fs::write(&manifest, "# comment\n\ntri.dat-s\nmissing.dat-s\n").unwrap();
    let csv = dir.path().join("bench.csv");
    let out = lorank(&["bench", path_str(&manifest), "--out", path_str(&csv)]);
    // one entry failed to load
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("SGM"));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].ends_with(",converged"));
    assert!(lines[2].ends_with(",error"));
}
