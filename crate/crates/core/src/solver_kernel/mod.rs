//! LP and MILP kernel.
//!
//! Models are stored row-wise with explicit variable bounds. Continuous
//! relaxations are handed to `minilp` (sparse revised simplex with warm
//! restarts); integrality is enforced by the branch-and-bound in [`branch`].

mod branch;
mod linearize;
mod lp_format;

use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use serde::Serialize;

pub use branch::{solve_milp, BoundSample, MilpOptions};
pub use linearize::{linearize_product, linearize_product_expr};

/// Absolute/relative tolerance used when re-checking reported solutions.
pub const FEASIBILITY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for RowSense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowSense::Le => "<=",
            RowSense::Eq => "=",
            RowSense::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// A linear program with bounded variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LpModel {
    pub direction: Direction,
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub var_names: Vec<String>,
    pub rows: Vec<Row>,
}

impl LpModel {
    pub fn new(direction: Direction) -> Self {
        Self {
            direction,
            objective: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            var_names: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, obj: f64, lower: f64, upper: f64) -> VarId {
        self.objective.push(obj);
        self.lower.push(lower);
        self.upper.push(upper);
        self.var_names.push(name.into());
        VarId(self.objective.len() - 1)
    }

    /// Adds a row; repeated variables in `terms` are merged.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        sense: RowSense,
        rhs: f64,
    ) -> usize {
        let mut merged: Vec<(VarId, f64)> = Vec::new();
        for (v, c) in terms {
            assert!(v.0 < self.objective.len(), "row references unknown variable {v:?}");
            match merged.iter_mut().find(|(u, _)| *u == v) {
                Some(slot) => slot.1 += c,
                None => merged.push((v, c)),
            }
        }
        merged.retain(|&(_, c)| c != 0.0);
        self.rows.push(Row { name: name.into(), terms: merged, sense, rhs });
        self.rows.len() - 1
    }

    pub fn var_count(&self) -> usize {
        self.objective.len()
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn nonzero_count(&self) -> usize {
        self.rows.iter().map(|r| r.terms.len()).sum()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Re-evaluates every bound and row at `x`; returns the first violation.
    pub fn check_feasible(&self, x: &[f64], tol: f64) -> Result<(), String> {
        if x.len() != self.var_count() {
            return Err(format!("solution has {} entries, model {}", x.len(), self.var_count()));
        }
        for (i, &v) in x.iter().enumerate() {
            let scale = 1.0 + v.abs();
            if v < self.lower[i] - tol * scale || v > self.upper[i] + tol * scale {
                return Err(format!(
                    "{} = {v} outside [{}, {}]",
                    self.var_names[i], self.lower[i], self.upper[i]
                ));
            }
        }
        for row in &self.rows {
            let mut activity = 0.0;
            let mut scale = 1.0 + row.rhs.abs();
            for &(v, c) in &row.terms {
                activity += c * x[v.0];
                scale += (c * x[v.0]).abs();
            }
            let slack = tol * scale;
            let ok = match row.sense {
                RowSense::Le => activity <= row.rhs + slack,
                RowSense::Ge => activity >= row.rhs - slack,
                RowSense::Eq => (activity - row.rhs).abs() <= slack,
            };
            if !ok {
                return Err(format!("row {} violated: {activity} {} {}", row.name, row.sense, row.rhs));
            }
        }
        Ok(())
    }

    /// Trivially decidable infeasibility: crossed bounds or a violated row
    /// without variables.
    fn trivially_infeasible(&self) -> bool {
        let crossed = self.lower.iter().zip(&self.upper).any(|(l, u)| l > u);
        crossed
            || self.rows.iter().any(|r| {
                r.terms.is_empty()
                    && match r.sense {
                        RowSense::Le => 0.0 > r.rhs + FEASIBILITY_TOL,
                        RowSense::Ge => 0.0 < r.rhs - FEASIBILITY_TOL,
                        RowSense::Eq => r.rhs.abs() > FEASIBILITY_TOL,
                    }
            })
    }

    /// Serializes to CPLEX LP text (see [`lp_format`]).
    pub fn to_lp_string(&self) -> String {
        lp_format::write(self, None)
    }

    pub(crate) fn to_minilp(&self) -> (minilp::Problem, Vec<minilp::Variable>) {
        let direction = match self.direction {
            Direction::Maximize => minilp::OptimizationDirection::Maximize,
            Direction::Minimize => minilp::OptimizationDirection::Minimize,
        };
        let mut problem = minilp::Problem::new(direction);
        let vars: Vec<_> = (0..self.var_count())
            .map(|i| problem.add_var(self.objective[i], (self.lower[i], self.upper[i])))
            .collect();
        for row in self.rows.iter().filter(|r| !r.terms.is_empty()) {
            let expr: minilp::LinearExpr = row.terms.iter().map(|&(v, c)| (vars[v.0], c)).collect();
            let op = match row.sense {
                RowSense::Le => minilp::ComparisonOp::Le,
                RowSense::Eq => minilp::ComparisonOp::Eq,
                RowSense::Ge => minilp::ComparisonOp::Ge,
            };
            problem.add_constraint(expr, op, row.rhs);
        }
        (problem, vars)
    }
}

/// An LP plus integrality flags.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    pub lp: LpModel,
    pub integer: Vec<bool>,
}

impl MilpModel {
    pub fn new(direction: Direction) -> Self {
        Self { lp: LpModel::new(direction), integer: Vec::new() }
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, obj: f64, lower: f64, upper: f64) -> VarId {
        self.integer.push(false);
        self.lp.add_var(name, obj, lower, upper)
    }

    /// Integer variable; bounds must be integral.
    pub fn add_integer(&mut self, name: impl Into<String>, obj: f64, lower: f64, upper: f64) -> VarId {
        assert!(lower.fract() == 0.0 && upper.fract() == 0.0, "integer bounds must be integral");
        self.integer.push(true);
        self.lp.add_var(name, obj, lower, upper)
    }

    pub fn add_binary(&mut self, name: impl Into<String>, obj: f64) -> VarId {
        self.add_integer(name, obj, 0.0, 1.0)
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        sense: RowSense,
        rhs: f64,
    ) -> usize {
        self.lp.add_row(name, terms, sense, rhs)
    }

    pub fn is_integer(&self, v: VarId) -> bool {
        self.integer[v.0]
    }

    pub fn is_binary(&self, v: VarId) -> bool {
        self.integer[v.0] && self.lp.lower[v.0] == 0.0 && self.lp.upper[v.0] == 1.0
    }

    pub fn integer_count(&self) -> usize {
        self.integer.iter().filter(|&&b| b).count()
    }

    pub fn to_lp_string(&self) -> String {
        lp_format::write(&self.lp, Some(&self.integer))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Node limit reached.
    CapHit,
    TimeLimit,
    /// The LP backend failed (e.g. numerical breakdown).
    NumericalFailure,
}

/// Outcome of an LP or MILP solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Present iff `status == Optimal`.
    pub objective: Option<f64>,
    /// Optimal solution, or the incumbent under a resource limit.
    pub solution: Option<Vec<f64>>,
    /// Objective of the incumbent (equals `objective` when optimal).
    pub incumbent: Option<f64>,
    /// Best proven bound on the optimum.
    pub bound: Option<f64>,
    pub nodes: usize,
    pub wall_time: Duration,
    pub trace: Vec<BoundSample>,
}

impl SolveReport {
    pub(crate) fn without_solution(status: SolveStatus, started: Instant) -> Self {
        Self {
            status,
            objective: None,
            solution: None,
            incumbent: None,
            bound: None,
            nodes: 0,
            wall_time: started.elapsed(),
            trace: Vec::new(),
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn value(&self, v: VarId) -> Option<f64> {
        self.solution.as_ref().map(|s| s[v.0])
    }
}

pub(crate) enum LpOutcome {
    Optimal(minilp::Solution),
    Infeasible,
    Unbounded,
    Failed(String),
}

pub(crate) fn guarded<F>(f: F) -> LpOutcome
where
    F: FnOnce() -> Result<minilp::Solution, minilp::Error>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(sol)) => {
            let obj = sol.objective();
            if obj.is_finite() {
                LpOutcome::Optimal(sol)
            } else if obj.is_infinite() {
                LpOutcome::Unbounded
            } else {
                LpOutcome::Failed("objective is NaN".into())
            }
        }
        Ok(Err(minilp::Error::Infeasible)) => LpOutcome::Infeasible,
        Ok(Err(minilp::Error::Unbounded)) => LpOutcome::Unbounded,
        Err(panic) => LpOutcome::Failed(
            panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "LP backend panicked".into()),
        ),
    }
}

/// Solves a linear program to optimality.
pub fn solve_lp(model: &LpModel) -> SolveReport {
    let started = Instant::now();
    if model.trivially_infeasible() {
        return SolveReport::without_solution(SolveStatus::Infeasible, started);
    }
    let (problem, vars) = model.to_minilp();
    match guarded(|| problem.solve()) {
        LpOutcome::Optimal(sol) => {
            let x: Vec<f64> = vars.iter().map(|&v| *sol.var_value(v)).collect();
            if let Err(why) = model.check_feasible(&x, FEASIBILITY_TOL) {
                let mut report = SolveReport::without_solution(SolveStatus::NumericalFailure, started);
                report.trace.clear();
                log_failure(&why);
                return report;
            }
            let obj = model.objective_value(&x);
            SolveReport {
                status: SolveStatus::Optimal,
                objective: Some(obj),
                solution: Some(x),
                incumbent: Some(obj),
                bound: Some(obj),
                nodes: 0,
                wall_time: started.elapsed(),
                trace: Vec::new(),
            }
        }
        LpOutcome::Infeasible => SolveReport::without_solution(SolveStatus::Infeasible, started),
        LpOutcome::Unbounded => SolveReport::without_solution(SolveStatus::Unbounded, started),
        LpOutcome::Failed(why) => {
            log_failure(&why);
            SolveReport::without_solution(SolveStatus::NumericalFailure, started)
        }
    }
}

fn log_failure(why: &str) {
    if std::env::var_os("FAIRCOVER_DEBUG").is_some() {
        eprintln!("solver_kernel: {why}");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_max_lp() {
        let mut m = LpModel::new(Direction::Maximize);
        let x = m.add_var("x", 1.0, 0.0, 1.0);
        let y = m.add_var("y", 1.0, 0.0, 2.0);
        m.add_row("c", [(x, 1.0), (y, 1.0)], RowSense::Le, 10.0);
        let r = solve_lp(&m);
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective.unwrap() - 3.0).abs() < 1e-9);
        assert!((r.value(x).unwrap() - 1.0).abs() < 1e-9);
        assert!((r.value(y).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_lp() {
        let mut m = LpModel::new(Direction::Maximize);
        let x = m.add_var("x", 1.0, 0.0, f64::INFINITY);
        m.add_row("c", [(x, 1.0)], RowSense::Le, -1.0);
        let r = solve_lp(&m);
        assert_eq!(r.status, SolveStatus::Infeasible);
        assert!(r.objective.is_none());
    }

    #[test]
    fn unbounded_lp() {
        let mut m = LpModel::new(Direction::Maximize);
        let x = m.add_var("x", 1.0, 0.0, f64::INFINITY);
        m.add_row("c", [(x, -1.0)], RowSense::Le, 1.0);
        assert_eq!(solve_lp(&m).status, SolveStatus::Unbounded);
    }

    #[test]
    fn constant_rows_are_decided_directly() {
        let mut m = LpModel::new(Direction::Minimize);
        let x = m.add_var("x", 0.0, 0.0, 1.0);
        m.add_row("empty", [(x, 0.0)], RowSense::Ge, 1.0);
        assert_eq!(solve_lp(&m).status, SolveStatus::Infeasible);
        let mut ok = LpModel::new(Direction::Minimize);
        let x = ok.add_var("x", 0.0, 0.0, 1.0);
        ok.add_row("empty", [(x, 0.0)], RowSense::Le, 0.0);
        assert_eq!(solve_lp(&ok).status, SolveStatus::Optimal);
    }

    #[test]
    fn repeated_terms_merge() {
        let mut m = LpModel::new(Direction::Maximize);
        let x = m.add_var("x", 1.0, 0.0, 10.0);
        m.add_row("c", [(x, 1.0), (x, 1.0)], RowSense::Le, 4.0);
        assert_eq!(m.rows[0].terms, vec![(x, 2.0)]);
        assert!((solve_lp(&m).objective.unwrap() - 2.0).abs() < 1e-9);
    }
}
