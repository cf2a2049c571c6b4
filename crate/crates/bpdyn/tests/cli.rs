use std::path::{Path, PathBuf};

use bpdyn::cli::main_with;
use bpdyn::trace_io::{read_csv, read_json, strip_timestamp};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn run(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let argv = std::iter::once("bpdyn").chain(args.iter().copied());
    let code = main_with(argv, &mut out);
    (code, String::from_utf8(out).unwrap())
}

#[test]
fn oracle_on_counterexample_graph() {
    let g = data("appendix_a.bpgraph");
    let (code, out) = run(&["oracle", "--graph", g.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "optimal 3, unique");
}

#[test]
fn alpha_of_identity() {
    let p = data("eye2.bpinst");
    let (code, out) = run(&["alpha", "--instance", p.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "1");
}

#[test]
fn irls_from_figure2_zeroes_the_bridge() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("t.json");
    let ys = dir.path().join("y.csv");
    let g = data("appendix_a.bpgraph");
    let (code, _) = run(&[
        "solve",
        "--graph",
        g.to_str().unwrap(),
        "--variant",
        "irls",
        "--start",
        "figure2",
        "--out",
        json.to_str().unwrap(),
        "--iterates",
        ys.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let trace = read_json(&json).unwrap();
    let names = trace.column_names.as_ref().unwrap();
    let bridge = names.iter().position(|n| n == "u3-u4").unwrap();
    let iterates = trace.iterates.as_ref().unwrap();
    assert_eq!(iterates[1][bridge], 0.0);

    let text = std::fs::read_to_string(&ys).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "u3-u4").unwrap();
    let row1: Vec<&str> = text.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(row1[0], "1");
    assert_eq!(row1[col].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn identical_argv_gives_identical_json() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for name in ["a.json", "b.json"] {
        let p = dir.path().join(name);
        let (code, _) = run(&[
            "solve", "--random", "3,7,1", "--seed", "42", "--variant", "physarum", "--h", "0.2",
            "--eps", "0.1", "--max-iter", "300", "--out", p.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        texts.push(strip_timestamp(&std::fs::read_to_string(p).unwrap()));
    }
    assert_eq!(texts[0], texts[1]);
    assert!(texts[0].contains("\"oracle\""));
}

#[test]
fn trace_without_oracle_omits_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.json");
    let (code, _) = run(&[
        "solve", "--appendix-a", "--variant", "physarum", "--h", "0.1", "--max-iter", "5",
        "--out", p.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&p).unwrap();
    assert!(!text.contains("\"oracle\""));
    assert!(read_json(&p).unwrap().oracle.is_none());
}

#[test]
fn zero_iterations_gives_one_csv_row() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.csv");
    let (code, _) = run(&[
        "solve", "--appendix-a", "--variant", "physarum", "--h", "0.1", "--max-iter", "0",
        "--csv", p.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&p).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert_eq!(read_csv(&p).unwrap().len(), 1);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["solve"]).0, 2);
    assert_eq!(run(&["solve", "--appendix-a", "--variant", "bogus"]).0, 2);
    assert_eq!(run(&["solve", "--appendix-a", "--graph", "x.bpgraph"]).0, 2);
    assert_eq!(run(&["solve", "--appendix-a", "--variant", "physarum", "--h", "0.2", "--eta", "0.1"]).0, 2);
    assert_eq!(run(&["solve", "--appendix-a", "--variant", "physarum", "--h", "1.5"]).0, 2);
    assert_eq!(run(&["solve", "--random", "3,8,1", "--start", "figure2"]).0, 2);
    assert_eq!(run(&["oracle", "--instance", "/nonexistent/file.bpinst"]).0, 2);
    assert_eq!(run(&["--help"]).0, 0);
}

#[test]
fn numeric_outcomes_exit_3() {
    // C(30,10) bases exceed the oracle budget.
    assert_eq!(run(&["oracle", "--random", "10,30,3", "--seed", "7"]).0, 3);
}

#[test]
fn sweep_is_in_grid_order() {
    let (code, out) = run(&[
        "sweep", "--appendix-a", "--start", "figure2", "--h-grid", "0.5,0.1", "--eps-grid",
        "0.2,0.1", "--max-iter", "5000",
    ]);
    assert_eq!(code, 0);
    let cells: Vec<(String, String)> = out
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[1].to_string())
        })
        .collect();
    let expect = [("0.5", "0.2"), ("0.5", "0.1"), ("0.1", "0.2"), ("0.1", "0.1")];
    assert_eq!(cells.len(), 4);
    for (c, e) in cells.iter().zip(expect) {
        assert_eq!((c.0.as_str(), c.1.as_str()), e);
    }
}

#[test]
fn appendix_a_subcommand_reports_suboptimal_limit() {
    let (code, out) = run(&["appendix-a"]);
    assert_eq!(code, 0);
    assert!(out.contains("optimal 3, unique"));
    assert!(out.contains("status stationary"));
}
