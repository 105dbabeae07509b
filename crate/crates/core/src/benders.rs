//! Delayed label-block generation for the K-adaptability model.
//!
//! The master starts with no label blocks. Each round solves it, scans the
//! scenario set for the worst response of the current schemes and adds the
//! block of the offending label. A label that is already present, or a
//! certified value above the master bound, means the dual caps cut off a
//! valid point; the cap is then doubled and all blocks are rebuilt.

use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::kadapt_model::{audit_solution, KAdaptConfig, KAdaptModel, KAdaptSolution};
use crate::netmodel::{cover_counts, Scenario};
use crate::solver_kernel::{MilpOptions, SolveStatus};
use crate::uncertainty::{LabelVector, DEFAULT_SCENARIO_CAP};

pub const MAX_CAP_DOUBLINGS: usize = 10;

#[derive(Debug, Clone)]
pub struct BendersLimits {
    pub time_limit: Option<Duration>,
    pub max_iterations: Option<usize>,
    pub scenario_cap: u128,
    pub max_doublings: usize,
}

impl Default for BendersLimits {
    fn default() -> Self {
        Self { time_limit: None, max_iterations: None, scenario_cap: DEFAULT_SCENARIO_CAP, max_doublings: MAX_CAP_DOUBLINGS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Separation {
    /// Scenario whose label needs a block. `value` is the best feasible
    /// scheme size, absent when no scheme is feasible.
    Violation { failures: Vec<usize>, label: LabelVector, value: Option<usize> },
    /// Every scenario admits a feasible scheme of size at least `value`.
    Certified { value: usize, failures: Vec<usize> },
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub label: Option<LabelVector>,
    pub violation: Option<usize>,
    pub failures: Option<Vec<usize>>,
    pub big_m: f64,
    pub nodes: usize,
    pub seconds: f64,
    pub event: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BendersStatus {
    Running,
    Certified,
    Infeasible,
    TimeLimit,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct BendersState {
    pub master: KAdaptModel,
    pub log: Vec<IterationRecord>,
    pub status: BendersStatus,
    pub doublings: usize,
}

impl BendersState {
    pub fn labels(&self) -> Vec<LabelVector> {
        self.master.labels().cloned().collect()
    }

    pub fn write_log(&self, path: &Path) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        for record in &self.log {
            serde_json::to_writer(&mut file, record)?;
            file.write_all(b"\n")?;
        }
        file.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct BendersOutcome {
    pub status: BendersStatus,
    pub solution: Option<KAdaptSolution>,
    /// Last master objective: an upper bound while not certified.
    pub bound: Option<f64>,
    pub state: BendersState,
}

impl BendersOutcome {
    pub fn tau(&self) -> Option<usize> {
        self.solution.as_ref().map(|s| s.tau).filter(|_| self.status == BendersStatus::Certified)
    }
}

/// Master problem with symmetry breaking and valid cuts (when enabled)
/// and no blocks.
pub fn init_master(instance: &Instance, cfg: &KAdaptConfig) -> Result<BendersState> {
    let mut master = KAdaptModel::master(instance, cfg.k, cfg.resolved_big_m(instance.node_count()))?;
    if cfg.symmetry_breaking {
        master.add_symmetry_breaking();
    }
    if cfg.valid_cuts {
        master.add_valid_cuts()?;
    }
    Ok(BendersState { master, log: Vec::new(), status: BendersStatus::Running, doublings: 0 })
}

/// Scans Ξ in enumeration order. The first scenario leaving every scheme
/// infeasible wins; otherwise the scenario with the smallest best-scheme
/// value (earliest on ties) is returned if it falls below `τ − ½`.
pub fn separate(instance: &Instance, sol: &KAdaptSolution, cap: u128) -> Result<Separation> {
    let n = instance.node_count();
    let mut worst: Option<(usize, Scenario, LabelVector)> = None;
    for xi in instance.uncertainty.enumerate(cap)? {
        let counts = cover_counts(&instance.graph, &sol.x, &xi)?;
        let label = LabelVector(
            sol.schemes
                .iter()
                .map(|y| (0..n).find(|&i| y.get(i) && counts[i] == 0).map_or(0, |i| i + 1))
                .collect(),
        );
        if label.is_positive() {
            return Ok(Separation::Violation { failures: xi.failures(), label, value: None });
        }
        let value = label.feasible_schemes().map(|k| sol.schemes[k].count_ones()).max().unwrap_or(0);
        if worst.as_ref().is_none_or(|(w, _, _)| value < *w) {
            worst = Some((value, xi, label));
        }
    }
    let Some((value, xi, label)) = worst else {
        return Err(Error::Input("uncertainty set is empty".into()));
    };
    if (value as f64) < sol.tau as f64 - 0.5 {
        Ok(Separation::Violation { failures: xi.failures(), label, value: Some(value) })
    } else {
        Ok(Separation::Certified { value, failures: xi.failures() })
    }
}

/// Runs block generation to certification or a limit.
pub fn run(instance: &Instance, cfg: &KAdaptConfig, limits: &BendersLimits) -> Result<BendersOutcome> {
    let started = Instant::now();
    let mut state = init_master(instance, cfg)?;
    let mut bound = None;
    let mut iteration = 0usize;
    let finish = |state: BendersState, status, solution, bound| {
        let mut state = state;
        state.status = status;
        Ok(BendersOutcome { status, solution, bound, state })
    };
    loop {
        if limits.max_iterations.is_some_and(|m| iteration >= m) {
            return finish(state, BendersStatus::IterationLimit, None, bound);
        }
        let remaining = match limits.time_limit {
            Some(t) => match t.checked_sub(started.elapsed()) {
                Some(r) => Some(r),
                None => return finish(state, BendersStatus::TimeLimit, None, bound),
            },
            None => None,
        };
        iteration += 1;
        let report = state.master.solve(&MilpOptions { time_limit: remaining, ..Default::default() });
        let mut record = IterationRecord {
            iteration,
            objective: report.objective.or(report.bound).unwrap_or(f64::NAN),
            label: None,
            violation: None,
            failures: None,
            big_m: state.master.big_m,
            nodes: report.nodes,
            seconds: started.elapsed().as_secs_f64(),
            event: "master",
        };
        match report.status {
            SolveStatus::Optimal => {}
            SolveStatus::Infeasible => {
                record.event = "infeasible";
                state.log.push(record);
                return finish(state, BendersStatus::Infeasible, None, None);
            }
            SolveStatus::TimeLimit | SolveStatus::CapHit => {
                record.event = "limit";
                state.log.push(record);
                return finish(state, BendersStatus::TimeLimit, None, report.bound);
            }
            other => return Err(Error::Solver(format!("master solve ended with {other:?}"))),
        }
        bound = report.objective;
        let sol = state.master.read_solution(&report)?;
        let cut = separate(instance, &sol, limits.scenario_cap)?;
        let caps_too_small = match &cut {
            Separation::Violation { failures, label, value } => {
                record.label = Some(label.clone());
                record.violation = *value;
                record.failures = Some(failures.clone());
                if state.master.add_block(label)? {
                    record.event = "block";
                    false
                } else {
                    true
                }
            }
            Separation::Certified { value, failures } => {
                record.violation = Some(*value);
                record.failures = Some(failures.clone());
                *value > sol.tau
            }
        };
        if caps_too_small {
            record.event = "double_cap";
            state.log.push(record);
            if state.doublings >= limits.max_doublings {
                return Err(Error::Audit(format!(
                    "dual caps still inconsistent after {} doublings (M = {})",
                    state.doublings, state.master.big_m
                )));
            }
            state.doublings += 1;
            state.master = state.master.rebuild(2.0 * state.master.big_m)?;
            continue;
        }
        if matches!(cut, Separation::Certified { .. }) {
            record.event = "certified";
            state.log.push(record);
            audit_solution(instance, &sol, limits.scenario_cap)?;
            return finish(state, BendersStatus::Certified, Some(sol), bound);
        }
        state.log.push(record);
    }
}
