//! Largest feasible fairness fraction `W` on a grid, and a common entry
//! point for solving an instance with any of the exact methods.

use std::time::Duration;

use serde::Serialize;

use crate::baselines::evaluate_instance;
use crate::benders::{self, BendersLimits, BendersStatus, IterationRecord};
use crate::error::{Error, Result};
use crate::exact_oracle::{solve_two_stage_floors, OracleOptions};
use crate::instance::Instance;
use crate::kadapt_model::{KAdaptConfig, KAdaptModel, ScenarioModel};
use crate::netmodel::{CoveringScheme, MonitorSet};
use crate::solver_kernel::{MilpOptions, SolveStatus};
use crate::uncertainty::DEFAULT_SCENARIO_CAP;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    Benders,
    Monolithic,
    /// One scheme per scenario, i.e. the exact two-stage problem.
    Saturated,
    Oracle,
}

impl std::str::FromStr for SolverChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "benders" => Ok(Self::Benders),
            "monolithic" => Ok(Self::Monolithic),
            "saturated" => Ok(Self::Saturated),
            "oracle" => Ok(Self::Oracle),
            other => Err(Error::Input(format!("unknown exact solver '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub solver: SolverChoice,
    pub kadapt: KAdaptConfig,
    pub time_limit: Option<Duration>,
    pub scenario_cap: u128,
    pub oracle: OracleOptions,
}

impl SolverConfig {
    pub fn new(solver: SolverChoice, k: usize) -> Self {
        Self {
            solver,
            kadapt: KAdaptConfig::new(k),
            time_limit: None,
            scenario_cap: DEFAULT_SCENARIO_CAP,
            oracle: OracleOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OutcomeStatus {
    Optimal,
    Infeasible,
    ResourceLimit,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveOutcome {
    pub status: OutcomeStatus,
    pub tau: Option<usize>,
    pub x: Option<MonitorSet>,
    pub schemes: Vec<CoveringScheme>,
    /// Upper bound reported on a resource limit.
    pub bound: Option<f64>,
    pub nodes: usize,
    pub iterations: usize,
    /// Block generation log; empty for the other methods.
    pub log: Vec<IterationRecord>,
}

impl SolveOutcome {
    fn empty(status: OutcomeStatus) -> Self {
        Self { status, tau: None, x: None, schemes: Vec::new(), bound: None, nodes: 0, iterations: 0, log: Vec::new() }
    }
}

/// Solves the instance (with its floors) by the chosen method and checks
/// the floors against the exact worst case of the returned monitor set.
pub fn solve_instance(instance: &Instance, setup: &SolverConfig) -> Result<SolveOutcome> {
    let opts = MilpOptions { time_limit: setup.time_limit, ..Default::default() };
    let outcome = match setup.solver {
        SolverChoice::Monolithic | SolverChoice::Saturated => {
            let (report, extracted) = if setup.solver == SolverChoice::Monolithic {
                let model = KAdaptModel::build_full(instance, &setup.kadapt)?;
                let report = model.solve(&opts);
                let sol = (report.status == SolveStatus::Optimal)
                    .then(|| model.extract_solution(&report, setup.scenario_cap))
                    .transpose()?;
                (report, sol)
            } else {
                let model = ScenarioModel::build(instance, setup.scenario_cap)?;
                let report = model.solve(&opts);
                let sol = (report.status == SolveStatus::Optimal)
                    .then(|| model.extract_solution(&report, setup.scenario_cap))
                    .transpose()?;
                (report, sol)
            };
            match report.status {
                SolveStatus::Optimal => {
                    let sol = extracted.expect("extracted with optimal status");
                    SolveOutcome {
                        status: OutcomeStatus::Optimal,
                        tau: Some(sol.tau),
                        x: Some(sol.x),
                        schemes: sol.schemes,
                        bound: report.objective,
                        nodes: report.nodes,
                        iterations: 1,
                        log: Vec::new(),
                    }
                }
                SolveStatus::Infeasible => SolveOutcome { nodes: report.nodes, ..SolveOutcome::empty(OutcomeStatus::Infeasible) },
                SolveStatus::TimeLimit | SolveStatus::CapHit => SolveOutcome {
                    bound: report.bound,
                    nodes: report.nodes,
                    ..SolveOutcome::empty(OutcomeStatus::ResourceLimit)
                },
                other => return Err(Error::Solver(format!("solve ended with {other:?}"))),
            }
        }
        SolverChoice::Benders => {
            let limits = BendersLimits { time_limit: setup.time_limit, scenario_cap: setup.scenario_cap, ..Default::default() };
            let out = benders::run(instance, &setup.kadapt, &limits)?;
            let nodes = out.state.log.iter().map(|r| r.nodes).sum();
            let iterations = out.state.log.len();
            let log = out.state.log;
            match (out.status, out.solution) {
                (BendersStatus::Certified, Some(sol)) => SolveOutcome {
                    status: OutcomeStatus::Optimal,
                    tau: Some(sol.tau),
                    x: Some(sol.x),
                    schemes: sol.schemes,
                    bound: out.bound,
                    nodes,
                    iterations,
                    log,
                },
                (BendersStatus::Infeasible, _) => {
                    SolveOutcome { nodes, iterations, log, ..SolveOutcome::empty(OutcomeStatus::Infeasible) }
                }
                _ => SolveOutcome {
                    bound: out.bound,
                    nodes,
                    iterations,
                    log,
                    ..SolveOutcome::empty(OutcomeStatus::ResourceLimit)
                },
            }
        }
        SolverChoice::Oracle => {
            let r = solve_two_stage_floors(instance, &setup.oracle)?;
            match (r.optimum, r.x) {
                (Some(v), Some(x)) => SolveOutcome {
                    tau: Some(v),
                    x: Some(x),
                    bound: Some(v as f64),
                    ..SolveOutcome::empty(OutcomeStatus::Optimal)
                },
                _ => SolveOutcome::empty(OutcomeStatus::Infeasible),
            }
        }
    };
    if let Some(x) = &outcome.x {
        certify_floors(instance, x, setup.scenario_cap)?;
    }
    Ok(outcome)
}

/// Every group's worst-case coverage meets its floor.
pub fn certify_floors(instance: &Instance, x: &MonitorSet, cap: u128) -> Result<()> {
    let report = evaluate_instance(instance, x, cap)?;
    for g in &report.groups {
        if g.covered < instance.floors[g.group] {
            return Err(Error::Audit(format!(
                "group {} covers {} < floor {} when monitors {:?} fail",
                g.group, g.covered, instance.floors[g.group], g.failures
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct FairnessConfig {
    pub step: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub setup: SolverConfig,
    /// Solve every grid point instead of binary searching.
    pub full_sweep: bool,
}

impl FairnessConfig {
    pub fn new(setup: SolverConfig) -> Self {
        Self { step: 0.04, w_min: 0.0, w_max: 1.0, setup, full_sweep: false }
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Input(format!("grid step must be positive, got {}", self.step)));
        }
        if !(0.0 <= self.w_min && self.w_min <= self.w_max && self.w_max <= 1.0) {
            return Err(Error::Input(format!("W range [{}, {}] must be ordered within [0, 1]", self.w_min, self.w_max)));
        }
        let count = ((self.w_max - self.w_min) / self.step + 1e-9).floor() as usize;
        Ok((0..=count).map(|i| ((self.w_min + i as f64 * self.step) * 1e9).round() / 1e9).collect())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridPoint {
    pub w: f64,
    pub feasible: bool,
    pub tau: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FairnessResult {
    pub w: f64,
    pub floors: Vec<usize>,
    pub outcome: SolveOutcome,
    /// Grid points actually solved, in order of evaluation.
    pub evaluated: Vec<GridPoint>,
}

impl FairnessResult {
    /// Feasibility never reappears after an infeasible grid point.
    pub fn monotone(&self) -> bool {
        let mut points = self.evaluated.clone();
        points.sort_by(|a, b| a.w.total_cmp(&b.w));
        points.windows(2).all(|p| p[0].feasible || !p[1].feasible)
    }
}

/// Largest grid `W` whose instance is feasible, with that solve's result.
pub fn max_feasible_w(instance: &Instance, cfg: &FairnessConfig) -> Result<FairnessResult> {
    let grid = cfg.grid()?;
    let mut evaluated = Vec::new();
    let mut outcomes: Vec<Option<SolveOutcome>> = vec![None; grid.len()];
    let mut probe = |idx: usize, evaluated: &mut Vec<GridPoint>| -> Result<bool> {
        let inst = instance.clone().with_w(grid[idx])?;
        let out = solve_instance(&inst, &cfg.setup)?;
        if out.status == OutcomeStatus::ResourceLimit {
            return Err(Error::Limit(format!("while solving W = {}", grid[idx])));
        }
        let feasible = out.status == OutcomeStatus::Optimal;
        evaluated.push(GridPoint { w: grid[idx], feasible, tau: out.tau });
        outcomes[idx] = Some(out);
        Ok(feasible)
    };
    let best = if cfg.full_sweep {
        let mut best = None;
        for idx in 0..grid.len() {
            if probe(idx, &mut evaluated)? {
                best = Some(idx);
            }
        }
        best
    } else if probe(0, &mut evaluated)? {
        let (mut lo, mut hi) = (0usize, grid.len() - 1);
        while lo < hi {
            let mid = (lo + hi).div_ceil(2);
            if probe(mid, &mut evaluated)? {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        Some(lo)
    } else {
        None
    };
    let Some(idx) = best else {
        return Err(Error::Domain(format!("instance is infeasible already at W = {}", grid[0])));
    };
    let outcome = outcomes[idx].take().expect("probed grid point");
    let w = grid[idx];
    Ok(FairnessResult { w, floors: instance.clone().with_w(w)?.floors, outcome, evaluated })
}
