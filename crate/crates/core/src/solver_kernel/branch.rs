//! Best-bound branch-and-bound over `minilp` relaxations.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::{Duration, Instant};

use serde::Serialize;

use super::{guarded, log_failure, LpOutcome, MilpModel, SolveReport, SolveStatus, FEASIBILITY_TOL};

/// Open nodes beyond this count stop carrying their parent's factorized
/// relaxation and are re-solved from the root instead.
const WARM_NODE_LIMIT: usize = 256;

#[derive(Debug, Clone)]
pub struct MilpOptions {
    pub time_limit: Option<Duration>,
    /// Absolute optimality gap; 0 proves exact optimality.
    pub gap_tol: f64,
    pub node_limit: Option<usize>,
    /// Objective takes integer values on every integer-feasible point, so a
    /// node is pruned unless its bound can improve the incumbent by one.
    pub integral_objective: bool,
    pub int_tol: f64,
    /// Keep one sample per processed node in the report trace.
    pub trace: bool,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            time_limit: None,
            gap_tol: 0.0,
            node_limit: None,
            integral_objective: false,
            int_tol: 1e-6,
            trace: false,
        }
    }
}

/// Incumbent and global bound after a processed node, in the model's sense.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundSample {
    pub node: usize,
    pub incumbent: Option<f64>,
    pub bound: f64,
}

#[derive(Debug, Clone, Copy)]
enum Cut {
    Fix(f64),
    AtMost(f64),
    AtLeast(f64),
}

struct Branch {
    var: usize,
    cut: Cut,
    parent: Option<Rc<Branch>>,
}

struct Node {
    bound: f64,
    depth: usize,
    seq: usize,
    branch: Option<Rc<Branch>>,
    warm: Option<Rc<minilp::Solution>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then(self.depth.cmp(&other.depth))
            .then(self.seq.cmp(&other.seq))
    }
}

fn apply(sol: minilp::Solution, var: minilp::Variable, cut: Cut) -> Result<minilp::Solution, minilp::Error> {
    match cut {
        Cut::Fix(v) => sol.fix_var(var, v),
        Cut::AtMost(v) => sol.add_constraint([(var, 1.0)], minilp::ComparisonOp::Le, v),
        Cut::AtLeast(v) => sol.add_constraint([(var, 1.0)], minilp::ComparisonOp::Ge, v),
    }
}

struct Search<'a> {
    model: &'a MilpModel,
    opts: &'a MilpOptions,
    vars: Vec<minilp::Variable>,
    incumbent: Option<(f64, Vec<f64>)>,
}

impl Search<'_> {
    fn node_bound(&self, raw: f64) -> f64 {
        if self.opts.integral_objective {
            (raw + 1e-6).floor()
        } else {
            raw
        }
    }

    fn prunable(&self, bound: f64) -> bool {
        match &self.incumbent {
            None => false,
            Some((z, _)) => {
                let b = self.node_bound(bound);
                b <= z + self.opts.gap_tol + 1e-9 * (1.0 + z.abs())
            }
        }
    }

    fn most_fractional(&self, x: &[f64]) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, &v) in x.iter().enumerate() {
            if !self.model.integer[i] {
                continue;
            }
            let frac = v - v.floor();
            let dist = frac.min(1.0 - frac);
            if dist > self.opts.int_tol && best.is_none_or(|(_, d)| dist > d) {
                best = Some((i, dist));
            }
        }
        best.map(|(i, _)| i)
    }

    /// Rounds integer columns and re-checks feasibility; falls back to a
    /// fresh LP over the continuous columns with the integers fixed.
    fn candidate(&self, x: &[f64]) -> Option<Vec<f64>> {
        let lp = &self.model.lp;
        let mut snapped: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, &v)| if self.model.integer[i] { v.round() } else { v.clamp(lp.lower[i], lp.upper[i]) })
            .collect();
        if lp.check_feasible(&snapped, FEASIBILITY_TOL).is_ok() {
            return Some(snapped);
        }
        let mut fixed = lp.clone();
        for i in 0..snapped.len() {
            if self.model.integer[i] {
                fixed.lower[i] = snapped[i];
                fixed.upper[i] = snapped[i];
            }
        }
        let polished = super::solve_lp(&fixed);
        match polished.solution {
            Some(sol) if polished.status == SolveStatus::Optimal => {
                snapped = sol;
                Some(snapped)
            }
            _ => {
                log_failure("integer candidate failed re-check");
                None
            }
        }
    }
}

/// Solves a MILP by best-bound branch-and-bound on the most fractional
/// integer column. Ties in the bound go to the deeper node.
pub fn solve_milp(model: &MilpModel, opts: &MilpOptions) -> SolveReport {
    let started = Instant::now();
    let lp = &model.lp;
    if lp.trivially_infeasible() {
        return SolveReport::without_solution(SolveStatus::Infeasible, started);
    }
    let (problem, vars) = lp.to_minilp();
    // Bounds and incumbents are kept in max-sense.
    let sense = match lp.direction {
        super::Direction::Maximize => 1.0,
        super::Direction::Minimize => -1.0,
    };
    let root = match guarded(|| problem.solve()) {
        LpOutcome::Optimal(sol) => Rc::new(sol),
        LpOutcome::Infeasible => return SolveReport::without_solution(SolveStatus::Infeasible, started),
        LpOutcome::Unbounded => return SolveReport::without_solution(SolveStatus::Unbounded, started),
        LpOutcome::Failed(why) => {
            log_failure(&why);
            return SolveReport::without_solution(SolveStatus::NumericalFailure, started);
        }
    };
    let mut search = Search { model, opts, vars, incumbent: None };
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    heap.push(Node {
        bound: f64::INFINITY,
        depth: 0,
        seq,
        branch: None,
        warm: None,
    });
    let mut nodes = 0usize;
    let mut trace = Vec::new();
    let mut last_bound = f64::INFINITY;
    let mut status = SolveStatus::Optimal;
    let mut failed = false;

    while let Some(node) = heap.pop() {
        if search.prunable(node.bound) {
            continue;
        }
        if opts.time_limit.is_some_and(|t| started.elapsed() >= t) {
            heap.push(node);
            status = SolveStatus::TimeLimit;
            break;
        }
        if opts.node_limit.is_some_and(|n| nodes >= n) {
            heap.push(node);
            status = SolveStatus::CapHit;
            break;
        }
        nodes += 1;
        let outcome = match (&node.branch, &node.warm) {
            (None, _) => LpOutcome::Optimal((*root).clone()),
            (Some(b), Some(warm)) => {
                let var = search.vars[b.var];
                let cut = b.cut;
                guarded(|| apply((**warm).clone(), var, cut))
            }
            (Some(b), None) => {
                let mut chain = Vec::new();
                let mut cur = Some(b.clone());
                while let Some(link) = cur {
                    chain.push((link.var, link.cut));
                    cur = link.parent.clone();
                }
                let vars = &search.vars;
                guarded(|| {
                    let mut sol = (*root).clone();
                    for &(v, cut) in chain.iter().rev() {
                        sol = apply(sol, vars[v], cut)?;
                    }
                    Ok(sol)
                })
            }
        };
        let sol = match outcome {
            LpOutcome::Optimal(sol) => sol,
            LpOutcome::Infeasible => continue,
            LpOutcome::Unbounded => {
                status = SolveStatus::Unbounded;
                break;
            }
            LpOutcome::Failed(why) => {
                log_failure(&why);
                failed = true;
                continue;
            }
        };
        let raw = sense * sol.objective();
        let x: Vec<f64> = search.vars.iter().map(|&v| *sol.var_value(v)).collect();
        if !search.prunable(raw) {
            match search.most_fractional(&x) {
                None => {
                    if let Some(cand) = search.candidate(&x) {
                        let z = sense * lp.objective_value(&cand);
                        let z = if opts.integral_objective { z.round() } else { z };
                        if search.incumbent.as_ref().is_none_or(|(best, _)| z > *best) {
                            search.incumbent = Some((z, cand));
                        }
                    } else {
                        failed = true;
                    }
                }
                Some(i) => {
                    let v = x[i];
                    let warm = (heap.len() < WARM_NODE_LIMIT).then(|| Rc::new(sol));
                    let binary = model.is_binary(super::VarId(i));
                    let (down, up) = if binary {
                        (Cut::Fix(0.0), Cut::Fix(1.0))
                    } else {
                        (Cut::AtMost(v.floor()), Cut::AtLeast(v.ceil()))
                    };
                    for cut in [down, up] {
                        seq += 1;
                        heap.push(Node {
                            bound: raw,
                            depth: node.depth + 1,
                            seq,
                            branch: Some(Rc::new(Branch { var: i, cut, parent: node.branch.clone() })),
                            warm: warm.clone(),
                        });
                    }
                }
            }
        }
        if opts.trace {
            let open = heap.peek().map_or(f64::NEG_INFINITY, |n| search.node_bound(n.bound));
            let inc = search.incumbent.as_ref().map(|(z, _)| *z);
            let bound = open.max(inc.unwrap_or(f64::NEG_INFINITY));
            last_bound = last_bound.min(bound);
            trace.push(BoundSample {
                node: nodes,
                incumbent: inc.map(|z| sense * z),
                bound: sense * last_bound,
            });
        }
    }

    let incumbent = search.incumbent.take();
    let open_bound = heap
        .iter()
        .filter(|n| !search.prunable(n.bound))
        .map(|n| search.node_bound(n.bound))
        .fold(f64::NEG_INFINITY, f64::max);
    if status == SolveStatus::Optimal && incumbent.is_none() {
        status = if failed { SolveStatus::NumericalFailure } else { SolveStatus::Infeasible };
    }
    if status == SolveStatus::Optimal && failed {
        status = SolveStatus::NumericalFailure;
    }
    let (inc_obj, solution) = match incumbent {
        Some((z, x)) => (Some(z), Some(x)),
        None => (None, None),
    };
    let bound = match status {
        SolveStatus::Optimal => inc_obj,
        SolveStatus::TimeLimit | SolveStatus::CapHit => {
            let b = open_bound.max(inc_obj.unwrap_or(f64::NEG_INFINITY));
            b.is_finite().then_some(b)
        }
        _ => None,
    };
    let tidy = |z: f64| {
        let z = sense * z;
        if (z - z.round()).abs() <= 1e-4 {
            z.round()
        } else {
            z
        }
    };
    SolveReport {
        status,
        objective: (status == SolveStatus::Optimal).then(|| tidy(inc_obj.unwrap())),
        incumbent: inc_obj.map(tidy),
        solution,
        bound: bound.map(|b| sense * b),
        nodes,
        wall_time: started.elapsed(),
        trace,
    }
}
