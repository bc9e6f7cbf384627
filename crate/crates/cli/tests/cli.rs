use std::path::PathBuf;
use std::process::{Command, Output};

fn lll(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lll")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lll-cli-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(lll(&[]).status.code(), Some(1));
    assert_eq!(lll(&["verify", "--gen-n", "abc"]).status.code(), Some(1));
    assert_eq!(lll(&["check"]).status.code(), Some(1));
    let bad = scratch("bad.cnf", "p cnf 2 1\n1 -1 0\n");
    assert_eq!(lll(&["check", "--cnf", bad.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(lll(&["--help"]).status.code(), Some(0));
}

#[test]
fn check_reports_slack() {
    let o = lll(&["check", "--gen-n", "200", "--analyze"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("condition holds=true"));
    assert!(text.contains("analyze config="));
}

#[test]
fn failing_condition_exits_2() {
    // all four 2-clauses over two variables
    let f = scratch("unsat.cnf", "p cnf 2 4\n1 2 0\n-1 2 0\n1 -2 0\n-1 -2 0\n");
    let o = lll(&["check", "--cnf", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("holds=false"));
    // δ must exceed q/n²
    let o = lll(&["lca", "--gen-n", "40", "--gen-d", "5", "--delta", "0.001", "--q", "10", "--query", "1"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn solve_prints_a_model() {
    let f = scratch("toy.cnf", "c toy\np cnf 3 2\n1 2 3 0\n-1 -2 0\n");
    let o = lll(&["solve", "--cnf", f.to_str().unwrap(), "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("s SATISFIABLE"));
    let v = text.lines().find(|l| l.starts_with("v ")).unwrap();
    let lits: Vec<i64> = v[2..].split_whitespace().map(|t| t.parse().unwrap()).collect();
    assert_eq!(lits.len(), 4);
    assert!(lits[..3].iter().any(|&l| l > 0));
    assert!(lits[0] < 0 || lits[1] < 0);
}

#[test]
fn lca_answers_queries() {
    let o = lll(&["lca", "--gen-n", "200", "--query", "1", "5", "1", "--seed", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let lines: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 4);
    let value = |l: &str| l.split_whitespace().find(|f| f.starts_with("value=")).unwrap().to_string();
    assert_eq!(value(&lines[1]), value(&lines[3]));
}

#[test]
fn verify_stream_is_reproducible() {
    let args = ["verify", "--gen-n", "160", "--trials", "5", "--q", "4", "--seed", "9"];
    let a = lll(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(stdout(&a), stdout(&lll(&args)));
    let text = stdout(&a);
    assert!(text.starts_with("# lll-records v1\nconfig "));
    assert_eq!(text.lines().filter(|l| l.starts_with("trial ")).count(), 5);
    assert!(text.lines().last().unwrap().starts_with("summary "));
    assert!(!text.contains("wall_ms"));
}

#[test]
fn sweep_writes_trend() {
    let dir = std::env::temp_dir().join(format!("lll-cli-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("sweep.txt");
    let o = lll(&["sweep", "--gen-n", "160", "--trials", "3", "--q", "3", "--r-max", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("summary ")).count(), 3);
    assert!(text.lines().last().unwrap().starts_with("trend "));
}

#[test]
fn witness_trees_print() {
    let f = scratch("chain.cnf", "p cnf 5 2\n1 2 -3 0\n3 4 -5 0\n");
    let o = lll(&["witness", "--cnf", f.to_str().unwrap(), "--seed", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let steps: usize = text.lines().next().unwrap().split_whitespace().next().unwrap()[6..].parse().unwrap();
    assert_eq!(text.lines().count(), steps + 1);
    assert!(text.lines().skip(1).all(|l| l.contains("tree=(")));
}

#[test]
fn gen_round_trips_through_check() {
    let dir = std::env::temp_dir().join(format!("lll-cli-tests-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cnf = dir.join("gen.cnf");
    assert_eq!(lll(&["gen", "ksat", "--n", "100", "--seed", "4", "--out", cnf.to_str().unwrap()]).status.code(), Some(0));
    let o = lll(&["check", "--cnf", cnf.to_str().unwrap()]);
    assert!(stdout(&o).contains("vars=100 clauses=250 k=8 d=20"));

    let graph = dir.join("g.txt");
    assert_eq!(lll(&["gen", "bipartite", "--n", "5", "--side", "3", "--p", "0.9", "--out", graph.to_str().unwrap()]).status.code(), Some(0));
    let o = lll(&["check", "--graph", graph.to_str().unwrap()]);
    assert!(stdout(&o).contains("graph vertices=30"), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("condition holds="));

    let h = dir.join("h.txt");
    assert_eq!(lll(&["gen", "hypergraph", "--n", "60", "--edges", "20:3", "--out", h.to_str().unwrap()]).status.code(), Some(0));
    assert!(stdout(&lll(&["check", "--hypergraph", h.to_str().unwrap()])).contains("edges=3"));
    assert_eq!(lll(&["gen", "hypergraph", "--n", "6", "--edges", "nope"]).status.code(), Some(1));
}
