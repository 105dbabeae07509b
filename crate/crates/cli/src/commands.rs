//! Subcommand implementations. Each returns the process exit code.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use serde::Serialize;

use faircover::baselines::{degree_centrality, evaluate_instance, greedy_robust, EvaluationReport};
use faircover::exact_oracle::{solve_rc, solve_rc_fair, solve_two_stage, OracleOptions, DEFAULT_ORACLE_CAP};
use faircover::fairness_search::{
    certify_floors, max_feasible_w, solve_instance, FairnessConfig, OutcomeStatus, SolveOutcome, SolverChoice,
    SolverConfig,
};
use faircover::instance::Instance;
use faircover::kadapt_model::{KAdaptConfig, ScenarioModel, DEFAULT_BLOCK_CAP};
use faircover::netmodel::{MonitorSet, Network};
use faircover::pof_lab::{
    empirical_pof, generate_sbm, worst_case_graph, pof_curves, pof_sample, CurveConfig, PofConfig, SbmParams,
};
use faircover::solver_kernel::{MilpOptions, SolveStatus};
use faircover::uncertainty::{UncertaintySet, DEFAULT_SCENARIO_CAP};
use faircover::{Error, Result};

use crate::output::{csv_string, emit, emit_json, ids, pct, SolveResult, Timings, WorstCase, SCHEMA};
use crate::{
    CapArgs, CompareArgs, EvaluateArgs, ExactArgs, FairnessArgs, Fixture, GenerateCommand, InstanceArgs, OracleArgs,
    OracleMode, PofCommand, SolveArgs, SolverArg,
};

const STAR: &str = include_str!("../fixtures/star.json");

struct Caps {
    scenario: u128,
    block: u128,
    oracle: u128,
}

fn env_cap(name: &str, default: u128) -> Result<u128> {
    match std::env::var(name) {
        Ok(v) => v.trim().parse().map_err(|_| Error::Input(format!("{name}: expected an integer, got '{v}'"))),
        Err(_) => Ok(default),
    }
}

fn caps(a: &CapArgs) -> Result<Caps> {
    Ok(Caps {
        scenario: a.scenario_cap.map_or_else(|| env_cap("FAIRCOVER_SCENARIO_CAP", DEFAULT_SCENARIO_CAP), Ok)?,
        block: a.block_cap.map_or_else(|| env_cap("FAIRCOVER_BLOCK_CAP", DEFAULT_BLOCK_CAP), Ok)?,
        oracle: a.oracle_cap.map_or_else(|| env_cap("FAIRCOVER_ORACLE_CAP", DEFAULT_ORACLE_CAP), Ok)?,
    })
}

fn load(a: &InstanceArgs) -> Result<(Network, Instance)> {
    let net = match (&a.graph, a.fixture) {
        (Some(path), _) => Network::read(path, a.symmetrize)?,
        (None, Some(Fixture::Star)) => Network::from_json_str(STAR, a.symmetrize)?,
        (None, None) => return Err(Error::Input("either --graph or --fixture is required".into())),
    };
    let n = net.graph.node_count();
    let uncertainty = match (&a.uncertainty, a.fail_budget) {
        (Some(path), _) => UncertaintySet::read(path, n)?,
        (None, Some(j)) => UncertaintySet::budget(n, j),
        (None, None) => return Err(Error::Input("either --fail-budget or --uncertainty is required".into())),
    };
    let inst = Instance::from_network(&net, uncertainty, a.monitors)?;
    Ok((net, inst))
}

fn choice(s: SolverArg) -> Option<SolverChoice> {
    match s {
        SolverArg::Benders => Some(SolverChoice::Benders),
        SolverArg::Monolithic => Some(SolverChoice::Monolithic),
        SolverArg::Saturated => Some(SolverChoice::Saturated),
        SolverArg::Oracle => Some(SolverChoice::Oracle),
        SolverArg::Greedy | SolverArg::Dc => None,
    }
}

fn solver_name(s: SolverArg) -> &'static str {
    match s {
        SolverArg::Benders => "benders",
        SolverArg::Monolithic => "monolithic",
        SolverArg::Saturated => "saturated",
        SolverArg::Oracle => "oracle",
        SolverArg::Greedy => "greedy",
        SolverArg::Dc => "dc",
    }
}

fn setup(solver: SolverChoice, e: &ExactArgs, caps: &Caps) -> Result<SolverConfig> {
    if e.k == 0 {
        return Err(Error::Input("--K must be at least 1".into()));
    }
    let time_limit = match e.time_limit {
        Some(t) if !(t.is_finite() && t > 0.0) => {
            return Err(Error::Input(format!("--time-limit must be positive, got {t}")))
        }
        t => t.map(Duration::from_secs_f64),
    };
    let mut s = SolverConfig::new(solver, e.k);
    s.kadapt = KAdaptConfig {
        big_m: e.big_m,
        symmetry_breaking: !e.no_symmetry_breaking,
        valid_cuts: !e.no_valid_cuts,
        block_cap: caps.block,
        ..KAdaptConfig::new(e.k)
    };
    s.time_limit = time_limit;
    s.scenario_cap = caps.scenario;
    s.oracle = OracleOptions { cap: caps.oracle, exhaustive: false };
    Ok(s)
}

fn fairness_cfg(setup: SolverConfig, f: &FairnessArgs) -> FairnessConfig {
    FairnessConfig { step: f.w_step, full_sweep: f.full_sweep, ..FairnessConfig::new(setup) }
}

fn check_w(w: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&w) {
        Ok(w)
    } else {
        Err(Error::Input(format!("-w must lie in [0, 1], got {w}")))
    }
}

/// Fair solve at a fixed or searched `W`; returns `(W, outcome, grid)`.
fn fair_solve(
    inst: &Instance,
    setup: SolverConfig,
    f: &FairnessArgs,
) -> Result<(f64, SolveOutcome, Vec<faircover::fairness_search::GridPoint>)> {
    if f.auto_w {
        let r = max_feasible_w(inst, &fairness_cfg(setup, f))?;
        Ok((r.w, r.outcome, r.evaluated))
    } else {
        let w = check_w(f.w.unwrap_or(0.0))?;
        let out = solve_instance(&inst.clone().with_w(w)?, &setup)?;
        Ok((w, out, Vec::new()))
    }
}

fn heuristic(s: SolverArg, inst: &Instance, caps: &Caps) -> Result<MonitorSet> {
    match s {
        SolverArg::Greedy => greedy_robust(inst, caps.scenario),
        _ => Ok(degree_centrality(inst)),
    }
}

fn floors_met(inst: &Instance, report: &EvaluationReport) -> bool {
    report.groups.iter().all(|g| g.covered >= inst.floors[g.group])
}

pub fn solve(a: &SolveArgs) -> Result<u8> {
    let started = Instant::now();
    let (net, inst) = load(&a.instance)?;
    let caps = caps(&a.caps)?;
    let mut result = SolveResult {
        schema: SCHEMA,
        command: "solve",
        solver: solver_name(a.solver).into(),
        k: None,
        instance: inst.summary(),
        w: 0.0,
        floors: Vec::new(),
        status: "optimal",
        tau: None,
        monitors: None,
        schemes: Vec::new(),
        floors_met: None,
        worst_case: None,
        w_search: Vec::new(),
        nodes: 0,
        iterations: Vec::new(),
        bound: None,
        timings: None,
    };
    let (inst, x) = match choice(a.solver) {
        None => {
            if a.fairness.auto_w {
                return Err(Error::Input("--auto-w needs an exact solver".into()));
            }
            let inst = inst.with_w(check_w(a.fairness.w.unwrap_or(0.0))?)?;
            result.status = "heuristic";
            let x = heuristic(a.solver, &inst, &caps)?;
            (inst, Some(x))
        }
        Some(c) => {
            result.k = Some(a.exact.k);
            let (w, out, grid) = fair_solve(&inst, setup(c, &a.exact, &caps)?, &a.fairness)?;
            let inst = inst.with_w(w)?;
            result.status = match out.status {
                OutcomeStatus::Optimal => "optimal",
                OutcomeStatus::Infeasible => "infeasible",
                OutcomeStatus::ResourceLimit => "resource_limit",
            };
            result.tau = out.tau;
            result.schemes = out.schemes.iter().map(|y| ids(&net, &y.indices())).collect();
            result.w_search = grid;
            result.nodes = out.nodes;
            result.bound = out.bound;
            if let Some(path) = &a.log {
                let mut text = String::new();
                for r in &out.log {
                    text.push_str(&serde_json::to_string(r)?);
                    text.push('\n');
                }
                std::fs::write(path, text)?;
            }
            result.iterations = out.log;
            if a.no_timings {
                result.iterations.iter_mut().for_each(|r| r.seconds = 0.0);
            }
            if let Some(x) = &out.x {
                certify_floors(&inst, x, caps.scenario)?;
            }
            (inst, out.x)
        }
    };
    result.w = inst.w.unwrap_or(0.0);
    result.floors = inst.floors.clone();
    result.instance = inst.summary();
    if let Some(x) = &x {
        let report = evaluate_instance(&inst, x, caps.scenario)?;
        if result.tau.is_some_and(|t| report.total < t) {
            return Err(Error::Audit(format!("worst-case coverage {} below reported {:?}", report.total, result.tau)));
        }
        if result.status == "heuristic" {
            result.tau = Some(report.total);
        }
        result.floors_met = Some(floors_met(&inst, &report));
        result.monitors = Some(ids(&net, &x.indices()));
        result.worst_case = Some(WorstCase::new(&net, &inst.floors, &report));
    }
    if !a.no_timings {
        result.timings = Some(Timings { seconds: started.elapsed().as_secs_f64() });
    }
    emit_json(a.output.as_deref(), &result)?;
    Ok(match result.status {
        "infeasible" => 2,
        "resource_limit" => 3,
        _ => 0,
    })
}

#[derive(Serialize)]
struct RecourseRow {
    failures: Vec<i64>,
    value: Option<usize>,
}

#[derive(Serialize)]
struct OracleDoc {
    schema: u32,
    command: &'static str,
    mode: &'static str,
    w: f64,
    floors: Vec<usize>,
    optimum: Option<usize>,
    monitors: Option<Vec<i64>>,
    recourse: Vec<RecourseRow>,
    monitor_sets: u128,
    scenarios: usize,
}

pub fn oracle(a: &OracleArgs) -> Result<u8> {
    let (net, inst) = load(&a.instance)?;
    let caps = caps(&a.caps)?;
    let opts = OracleOptions { cap: caps.oracle, exhaustive: a.exhaustive };
    let w = check_w(a.w)?;
    let (mode, r) = match a.mode {
        OracleMode::Rc => ("rc", solve_rc(&inst, &opts)?),
        OracleMode::Fair => ("fair", solve_rc_fair(&inst, w, &opts)?),
        OracleMode::TwoStage => ("two_stage", solve_two_stage(&inst, w, &opts)?),
    };
    let floors = match a.mode {
        OracleMode::Rc => vec![0; inst.groups.group_count()],
        _ => inst.clone().with_w(w)?.floors,
    };
    let doc = OracleDoc {
        schema: SCHEMA,
        command: "oracle",
        mode,
        w: if matches!(a.mode, OracleMode::Rc) { 0.0 } else { w },
        floors,
        optimum: r.optimum,
        monitors: r.x.as_ref().map(|x| ids(&net, &x.indices())),
        recourse: r.recourse.iter().map(|e| RecourseRow { failures: ids(&net, &e.failures), value: e.value }).collect(),
        monitor_sets: r.monitor_sets,
        scenarios: r.scenarios,
    };
    emit_json(a.output.as_deref(), &doc)?;
    Ok(if r.optimum.is_some() { 0 } else { 2 })
}

#[derive(Serialize)]
struct EvaluateDoc {
    schema: u32,
    command: &'static str,
    monitors: Vec<i64>,
    w: f64,
    floors: Vec<usize>,
    floors_met: bool,
    worst_case: WorstCase,
}

pub fn evaluate(a: &EvaluateArgs) -> Result<u8> {
    let (net, inst) = load(&a.instance)?;
    let caps = caps(&a.caps)?;
    let inst = inst.with_w(check_w(a.w)?)?;
    let index: HashMap<i64, usize> = net.node_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let nodes = a
        .at
        .iter()
        .map(|id| index.get(id).copied().ok_or_else(|| Error::Input(format!("--at: unknown node id {id}"))))
        .collect::<Result<Vec<_>>>()?;
    let x = MonitorSet::from_indices(inst.node_count(), &nodes);
    if !x.within_budget(inst.budget) {
        return Err(Error::Input(format!("{} monitors exceed the budget {}", x.count_ones(), inst.budget)));
    }
    let report = evaluate_instance(&inst, &x, caps.scenario)?;
    let doc = EvaluateDoc {
        schema: SCHEMA,
        command: "evaluate",
        monitors: ids(&net, &x.indices()),
        w: a.w,
        floors: inst.floors.clone(),
        floors_met: floors_met(&inst, &report),
        worst_case: WorstCase::new(&net, &inst.floors, &report),
    };
    emit_json(a.output.as_deref(), &doc)?;
    Ok(0)
}

fn opt_cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub fn pof(c: &PofCommand) -> Result<u8> {
    match c {
        PofCommand::Curves(a) => {
            let cfg = CurveConfig {
                small: a.small,
                large_min: a.large_min,
                large_max: a.large_max,
                points: a.points,
                monitors: a.monitors,
                gammas: a.gammas.clone(),
                integer_failures: a.integer_failures,
            };
            let points = pof_curves(&cfg)?;
            let header = ["size_ratio", "small", "large", "gamma", "j", "analytic", "empirical", "ci_low", "ci_high"];
            let text = csv_string(&header, |w| {
                for p in &points {
                    w.write_record([
                        p.ratio.to_string(),
                        p.small.to_string(),
                        p.large.to_string(),
                        p.gamma.to_string(),
                        p.j.to_string(),
                        p.pof.to_string(),
                        String::new(),
                        String::new(),
                        String::new(),
                    ])?;
                }
                Ok(())
            })?;
            emit(a.output.as_deref(), &text)?;
        }
        PofCommand::Sbm(a) => {
            let params = SbmParams::uniform(a.sbm.sizes.clone(), a.sbm.a, a.sbm.b, a.sbm.seed)?;
            let caps = caps(&a.caps)?;
            let solver = choice(a.solver).ok_or_else(|| Error::Input("pof needs an exact solver".into()))?;
            let fairness = FairnessConfig { step: a.w_step, ..FairnessConfig::new(setup(solver, &a.exact, &caps)?) };
            let cfg = PofConfig::new(a.monitors, a.fail_budget, a.samples, fairness);
            let r = empirical_pof(&params, &cfg)?;
            let first = *params.sizes.first().expect("validated") as f64;
            let last = *params.sizes.last().expect("validated") as f64;
            let header = [
                "size_ratio", "sizes", "gamma", "j", "analytic", "empirical", "ci_low", "ci_high", "mean_opt",
                "mean_opt_fair", "samples", "failures",
            ];
            let sizes: Vec<String> = params.sizes.iter().map(usize::to_string).collect();
            let text = csv_string(&header, |w| {
                w.write_record([
                    (last / first).to_string(),
                    sizes.join(" "),
                    r.gamma.to_string(),
                    a.fail_budget.to_string(),
                    opt_cell(r.analytic),
                    r.empirical.to_string(),
                    r.ci.0.to_string(),
                    r.ci.1.to_string(),
                    r.mean_opt.to_string(),
                    r.mean_opt_fair.to_string(),
                    r.samples.to_string(),
                    r.failures.to_string(),
                ])
            })?;
            emit(a.output.as_deref(), &text)?;
            if let Some(path) = &a.json {
                emit_json(Some(path), &r)?;
            }
        }
        PofCommand::Worst(a) => {
            let fairness =
                FairnessConfig { step: a.w_step, ..FairnessConfig::new(SolverConfig::new(SolverChoice::Oracle, 1)) };
            let mut rows = Vec::new();
            for &n in &a.n {
                let (g, p) = worst_case_graph(n)?;
                let s = pof_sample(&Instance::with_budget(g, p, 2, 0)?, &fairness)?;
                rows.push((n, s, 1.0 - s.opt_fair as f64 / s.opt as f64, 1.0 - 4.0 / (n as f64 - 3.0)));
            }
            let header = ["n", "opt", "opt_fair", "w", "pof", "closed_form"];
            let text = csv_string(&header, |w| {
                for (n, s, pof, closed) in &rows {
                    w.write_record([
                        n.to_string(),
                        s.opt.to_string(),
                        s.opt_fair.to_string(),
                        s.w.to_string(),
                        pof.to_string(),
                        closed.to_string(),
                    ])?;
                }
                Ok(())
            })?;
            emit(a.output.as_deref(), &text)?;
        }
    }
    Ok(0)
}

pub fn generate(c: &GenerateCommand) -> Result<u8> {
    let (net, output) = match c {
        GenerateCommand::Sbm(a) => {
            let params = SbmParams::uniform(a.sbm.sizes.clone(), a.sbm.a, a.sbm.b, a.sbm.seed)?;
            let (g, p) = generate_sbm(&params)?;
            (Network::from_parts(g, p)?, &a.output)
        }
        GenerateCommand::Worst(a) => {
            let (g, p) = worst_case_graph(a.n)?;
            (Network::from_parts(g, p)?, &a.output)
        }
    };
    let mut text = net.to_json_string()?;
    text.push('\n');
    emit(output.as_deref(), &text)?;
    Ok(0)
}

/// Exact unconstrained optimum when it fits the caps, else `None`.
fn unconstrained_optimum(inst: &Instance, e: &ExactArgs, caps: &Caps) -> Result<Option<usize>> {
    if inst.uncertainty.enumeration_size() > caps.scenario {
        return Ok(None);
    }
    let model = ScenarioModel::build(&inst.clone().with_w(0.0)?, caps.scenario)?;
    let opts = MilpOptions { time_limit: e.time_limit.map(Duration::from_secs_f64), ..Default::default() };
    let report = model.solve(&opts);
    Ok(match report.status {
        SolveStatus::Optimal => Some(model.extract_solution(&report, caps.scenario)?.tau),
        _ => None,
    })
}

pub fn compare(a: &CompareArgs) -> Result<u8> {
    let (net, inst) = load(&a.instance)?;
    let caps = caps(&a.caps)?;
    let fairness = FairnessArgs { auto_w: a.fairness.auto_w || a.fairness.w.is_none(), ..a.fairness.clone() };
    struct Row {
        solver: SolverArg,
        k: Option<usize>,
        w: Option<f64>,
        coverage: usize,
        min_group: f64,
    }
    let mut rows = Vec::new();
    for &s in &a.solvers {
        match choice(s) {
            None => {
                let x = heuristic(s, &inst, &caps)?;
                let r = evaluate_instance(&inst, &x, caps.scenario)?;
                rows.push(Row { solver: s, k: None, w: None, coverage: r.total, min_group: r.worst_group_fraction() });
            }
            Some(c) => {
                let (w, out, _) = fair_solve(&inst, setup(c, &a.exact, &caps)?, &fairness)?;
                let x = match (out.status, out.x) {
                    (OutcomeStatus::Optimal, Some(x)) => x,
                    (OutcomeStatus::Infeasible, _) => {
                        return Err(Error::Domain(format!("{} found no fair solution", solver_name(s))))
                    }
                    _ => return Ok(3),
                };
                let fair = inst.clone().with_w(w)?;
                certify_floors(&fair, &x, caps.scenario)?;
                let r = evaluate_instance(&fair, &x, caps.scenario)?;
                rows.push(Row {
                    solver: s,
                    k: Some(a.exact.k),
                    w: Some(w),
                    coverage: r.total,
                    min_group: r.worst_group_fraction(),
                });
            }
        }
    }
    let baselines: Vec<(SolverArg, f64)> =
        rows.iter().filter(|r| r.k.is_none()).map(|r| (r.solver, pct(r.min_group))).collect();
    let any_exact = rows.iter().any(|r| r.k.is_some());
    let reference = if any_exact {
        match unconstrained_optimum(&inst, &a.exact, &caps)? {
            Some(v) => Some((v, "exact")),
            None => Some((evaluate_instance(&inst, &greedy_robust(&inst, caps.scenario)?, caps.scenario)?.total, "greedy")),
        }
    } else {
        None
    };
    let mut header: Vec<String> = ["solver", "k", "w", "coverage", "coverage_pct", "min_group_pct"].map(String::from).to_vec();
    header.extend(baselines.iter().map(|(s, _)| format!("gain_vs_{}_pct", solver_name(*s))));
    header.extend(["pof_pct", "pof_reference"].map(String::from));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let n = net.graph.node_count() as f64;
    let text = csv_string(&header_refs, |wr| {
        for r in &rows {
            let mine = pct(r.min_group);
            let mut rec = vec![
                solver_name(r.solver).to_string(),
                r.k.map_or_else(String::new, |k| k.to_string()),
                opt_cell(r.w),
                r.coverage.to_string(),
                format!("{:.1}", pct(r.coverage as f64 / n)),
                format!("{mine:.1}"),
            ];
            for (_, base) in &baselines {
                rec.push(if r.k.is_some() { format!("{:.1}", mine - base) } else { String::new() });
            }
            match (r.k, reference) {
                (Some(_), Some((opt, name))) if opt > 0 => {
                    rec.push(format!("{:.1}", pct(1.0 - r.coverage as f64 / opt as f64)));
                    rec.push(name.to_string());
                }
                _ => rec.extend([String::new(), String::new()]),
            }
            wr.write_record(&rec)?;
        }
        Ok(())
    })?;
    emit(a.output.as_deref(), &text)?;
    Ok(0)
}
