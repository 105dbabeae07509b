use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use faircover::fairness_search::{max_feasible_w, FairnessConfig, SolverChoice, SolverConfig};
use faircover::netmodel::Network;
use faircover::Instance;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_faircover"));
    c.env_remove("FAIRCOVER_SCENARIO_CAP").env_remove("FAIRCOVER_BLOCK_CAP").env_remove("FAIRCOVER_ORACLE_CAP");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stderr)))
}

fn star_instance(i: usize, j: usize) -> Instance {
    let text = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/star.json")).unwrap();
    let net = Network::from_json_str(&text, false).unwrap();
    Instance::with_budget(net.graph, net.groups, i, j).unwrap()
}

#[test]
fn star_auto_w() {
    let out = run(&["solve", "--fixture", "star", "--K", "2", "--monitors", "2", "--fail-budget", "1", "--auto-w"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["schema"], 1);
    assert_eq!(doc["status"], "optimal");
    assert_eq!(doc["tau"], 1);
    let cfg = FairnessConfig::new(SolverConfig::new(SolverChoice::Oracle, 1));
    let expect = max_feasible_w(&star_instance(2, 1), &cfg).unwrap();
    assert_eq!(doc["w"].as_f64(), Some(expect.w));
    assert!(doc["timings"]["seconds"].is_number());
}

#[test]
fn solvers_agree_on_star() {
    for solver in ["benders", "monolithic", "saturated", "oracle"] {
        let out = run(&["solve", "--fixture", "star", "-i", "2", "-j", "1", "--solver", solver, "--no-timings"]);
        assert_eq!(out.status.code(), Some(0), "{solver}");
        assert_eq!(json(&out)["tau"], 1, "{solver}");
    }
}

#[test]
fn results_are_deterministic_without_timings() {
    let args = ["solve", "--fixture", "star", "-k", "2", "-i", "2", "-j", "1", "--auto-w", "--no-timings"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(json(&a).get("timings").is_none());
}

#[test]
fn emitted_solutions_meet_their_floors() {
    for w in ["0", "0.2", "0.4"] {
        let out = run(&["solve", "--fixture", "star", "-i", "3", "-j", "1", "-w", w, "--solver", "saturated"]);
        let doc = json(&out);
        if out.status.code() == Some(2) {
            assert_eq!(doc["status"], "infeasible");
            continue;
        }
        assert_eq!(doc["floors_met"], true);
        for g in doc["worst_case"]["groups"].as_array().unwrap() {
            assert!(g["covered"].as_u64() >= g["floor"].as_u64());
            let pct = g["percent"].as_f64().unwrap();
            assert_eq!((pct * 10.0).round() / 10.0, pct);
        }
    }
}

#[test]
fn infeasible_exits_two() {
    let out = run(&["solve", "--fixture", "star", "-i", "1", "-j", "1", "-w", "1", "--solver", "benders"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["status"], "infeasible");
}

#[test]
fn caps_exit_three() {
    let out = run(&["solve", "--fixture", "star", "-i", "2", "-j", "1", "--scenario-cap", "2"]);
    assert_eq!(out.status.code(), Some(3));
    let out = bin()
        .args(["oracle", "--fixture", "star", "-i", "2", "-j", "1"])
        .env("FAIRCOVER_ORACLE_CAP", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let out = bin().args(["oracle", "--fixture", "star", "-i", "2", "-j", "1"]).env("FAIRCOVER_ORACLE_CAP", "x").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_graph_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\"nodes\": [\n  {\"id\": 0, \"group\": }\n], \"edges\": []}").unwrap();
    let out = run(&["solve", "--graph", path.to_str().unwrap(), "-i", "1", "-j", "0"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2"), "{err}");
    assert!(err.contains("bad.json"), "{err}");
}

#[test]
fn iteration_log_is_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("trace.jsonl");
    let out = run(&["solve", "--fixture", "star", "-i", "2", "-j", "1", "--no-valid-cuts", "--log", log.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&log).unwrap();
    let records: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(records.len() >= 2);
    assert_eq!(records.last().unwrap()["event"], "certified");
    assert_eq!(json(&out)["iterations"].as_array().unwrap().len(), records.len());
}

#[test]
fn oracle_and_evaluate() {
    let out = run(&["oracle", "--fixture", "star", "-i", "2", "-j", "1", "--mode", "rc"]);
    let doc = json(&out);
    assert_eq!(doc["optimum"], 1);
    assert_eq!(doc["recourse"].as_array().unwrap().len(), 6);
    let out = run(&["evaluate", "--fixture", "star", "-i", "2", "-j", "1", "--at", "1,2"]);
    let doc = json(&out);
    assert_eq!(doc["worst_case"]["total"], 1);
    assert_eq!(doc["worst_case"]["scenarios"], 3);
    let out = run(&["evaluate", "--fixture", "star", "-i", "2", "-j", "1", "--at", "9"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn heuristics_report_their_coverage() {
    let out = run(&["solve", "--fixture", "star", "-i", "1", "-j", "0", "--solver", "dc"]);
    let doc = json(&out);
    assert_eq!(doc["status"], "heuristic");
    assert_eq!(doc["monitors"], serde_json::json!([0]));
    assert_eq!(doc["tau"], 4);
    let out = run(&["solve", "--fixture", "star", "-i", "1", "-j", "0", "--solver", "greedy", "--auto-w"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn compare_table() {
    let out = run(&["compare", "--fixture", "star", "-i", "1", "-j", "0", "--solvers", "saturated,greedy,dc"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "solver,k,w,coverage,coverage_pct,min_group_pct,gain_vs_greedy_pct,gain_vs_dc_pct,pof_pct,pof_reference"
    );
    // The center covers every leaf: 2 of 3 and 2 of 2, so W stops at 0.64.
    assert_eq!(lines.next().unwrap(), "saturated,1,0.64,4,80.0,66.7,0.0,0.0,0.0,exact");
    assert_eq!(lines.next().unwrap(), "greedy,,,4,80.0,66.7,,,,");
    assert_eq!(lines.next().unwrap(), "dc,,,4,80.0,66.7,,,,");
}

#[test]
fn generated_networks_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let out = run(&["generate", "sbm", "--sizes", "20,40", "--seed", "7", "-o", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let net = Network::read(&a, false).unwrap();
    assert_eq!(net.groups.sizes(), vec![20, 40]);
    let out = run(&["solve", "--graph", a.to_str().unwrap(), "-i", "2", "-j", "0", "--solver", "dc"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn pof_outputs() {
    let out = run(&["pof", "worst", "--n", "9,11,19"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<String>> = text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    let pofs: Vec<f64> = rows.iter().map(|r| r[4].parse().unwrap()).collect();
    for (p, e) in pofs.iter().zip([1.0 / 3.0, 0.5, 0.75]) {
        assert!((p - e).abs() < 1e-12);
    }
    let out = run(&["pof", "curves", "--points", "10", "--gammas", "0,0.1"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 21);
    let out = run(&["pof", "sbm", "--sizes", "4,4", "--a", "10", "--b", "0", "-i", "2", "--samples", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[5], "0");
}
