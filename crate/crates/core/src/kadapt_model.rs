//! The K-adaptability counterpart as a mixed-integer linear program.
//!
//! The scenario space is partitioned by label vectors `ℓ ∈ {0..N}^K`. For
//! every instantiated label the model carries the dual of the feasibility
//! LP of the cell `Ξ(x, y, ℓ)` over `{ξ ∈ [0,1]^N : Aξ ≥ b}`:
//!
//! ```text
//! D(ℓ) = −e'θ + b'α + Σ_{ℓ_k>0} (1 − y^k_{ℓ_k}) ν_k + Σ_{ℓ_k=0} Σ_n y^k_n β^k_n
//! θ_m ≥ (A'α)_m − Σ_{ℓ_k>0, m∈δ(ℓ_k)} x_m ν_k + Σ_{ℓ_k=0} x_m Σ_{n: m∈δ(n)} β^k_n
//! ```
//!
//! Labels with a feasible scheme bound the epigraph, `τ ≤ D(ℓ) + Σ_k λ_k |y^k|`
//! with `λ` on the simplex of feasible schemes; labels without one must
//! certify an empty cell, `D(ℓ) ≥ 1`. Dual variables are capped at `M`
//! and every product with a binary factor is linearized exactly.
//!
//! Node `n` (0-based) appears in labels as `n + 1`.

use std::collections::HashMap;
use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::netmodel::{cover_counts, coverage_indicator, CoveringScheme, MonitorSet, Scenario};
use crate::solver_kernel::{
    linearize_product, linearize_product_expr, solve_milp, Direction, MilpModel, MilpOptions, RowSense, SolveReport,
    SolveStatus, VarId,
};
use crate::uncertainty::LabelVector;

pub const DEFAULT_BLOCK_CAP: u128 = 100_000;

/// Largest `|Ξ|` for which per-scenario coverage bounds are added.
pub const MAX_BOUND_SCENARIOS: u128 = 512;

/// Default dual cap `M = 10·N`.
pub fn default_big_m(n: usize) -> f64 {
    10.0 * n.max(1) as f64
}

#[derive(Debug, Clone)]
pub struct KAdaptConfig {
    pub k: usize,
    /// Dual cap; `None` means [`default_big_m`].
    pub big_m: Option<f64>,
    pub symmetry_breaking: bool,
    /// Add the inequalities of [`KAdaptModel::add_valid_cuts`].
    pub valid_cuts: bool,
    pub block_cap: u128,
}

impl KAdaptConfig {
    pub fn new(k: usize) -> Self {
        Self { k, big_m: None, symmetry_breaking: true, valid_cuts: true, block_cap: DEFAULT_BLOCK_CAP }
    }

    pub fn resolved_big_m(&self, n: usize) -> f64 {
        self.big_m.unwrap_or_else(|| default_big_m(n))
    }
}

/// Columns of one label block.
#[derive(Debug, Clone)]
pub struct Block {
    pub label: LabelVector,
    pub theta: Vec<VarId>,
    pub alpha: Vec<VarId>,
    pub nu: Vec<Option<VarId>>,
    pub beta: Vec<Option<Vec<VarId>>>,
    pub lambda: Vec<Option<VarId>>,
    pub rows: Range<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelStats {
    pub k: usize,
    pub blocks: usize,
    pub blocks_l0: usize,
    pub blocks_lplus: usize,
    pub rows: usize,
    pub columns: usize,
    pub binaries: usize,
    pub nonzeros: usize,
    pub big_m: f64,
    pub symmetry_breaking: bool,
}

/// First-stage decisions read back from a solved model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KAdaptSolution {
    pub x: MonitorSet,
    pub schemes: Vec<CoveringScheme>,
    pub tau: usize,
}

#[derive(Debug, Clone)]
pub struct KAdaptModel {
    pub instance: Instance,
    pub k: usize,
    pub big_m: f64,
    pub milp: MilpModel,
    pub tau: VarId,
    pub x: Vec<VarId>,
    pub y: Vec<Vec<VarId>>,
    blocks: Vec<Block>,
    index: HashMap<LabelVector, usize>,
    symmetry: bool,
    cuts: bool,
}

impl KAdaptModel {
    /// Model with `τ ≤ N`, `x ∈ X`, `y^k ∈ Y` and no label blocks.
    pub fn master(instance: &Instance, k: usize, big_m: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::Input("K must be at least 1".into()));
        }
        if !(big_m.is_finite() && big_m > 0.0) {
            return Err(Error::Input(format!("dual cap must be positive and finite, got {big_m}")));
        }
        let n = instance.node_count();
        let mut milp = MilpModel::new(Direction::Maximize);
        let tau = milp.add_integer("tau", 1.0, 0.0, n as f64);
        let x: Vec<_> = (0..n).map(|i| milp.add_binary(format!("x{i}"), 0.0)).collect();
        milp.add_row("budget", x.iter().map(|&v| (v, 1.0)), RowSense::Le, instance.budget as f64);
        let mut y = Vec::with_capacity(k);
        for s in 0..k {
            let ys: Vec<_> = (0..n).map(|i| milp.add_binary(format!("y{s}_{i}"), 0.0)).collect();
            for c in 0..instance.groups.group_count() {
                let floor = instance.floors[c];
                if floor > 0 {
                    let members = instance.groups.members(c).iter().map(|&i| (ys[i], 1.0));
                    milp.add_row(format!("floor{s}_{c}"), members, RowSense::Ge, floor as f64);
                }
            }
            y.push(ys);
        }
        Ok(Self {
            instance: instance.clone(),
            k,
            big_m,
            milp,
            tau,
            x,
            y,
            blocks: Vec::new(),
            index: HashMap::new(),
            symmetry: false,
            cuts: false,
        })
    }

    /// All `(N+1)^K` blocks; refuses beyond `cfg.block_cap`.
    pub fn build_full(instance: &Instance, cfg: &KAdaptConfig) -> Result<Self> {
        let n = instance.node_count();
        let count = LabelVector::block_count(n, cfg.k);
        if count > cfg.block_cap {
            return Err(Error::CapExceeded { what: "label blocks", count, cap: cfg.block_cap });
        }
        let mut model = Self::master(instance, cfg.k, cfg.resolved_big_m(n))?;
        if cfg.symmetry_breaking {
            model.add_symmetry_breaking();
        }
        if cfg.valid_cuts {
            model.add_valid_cuts()?;
        }
        for label in LabelVector::all(n, cfg.k) {
            model.add_block(&label)?;
        }
        Ok(model)
    }

    /// Same model with every block re-emitted under a new dual cap.
    pub fn rebuild(&self, big_m: f64) -> Result<Self> {
        let mut model = Self::master(&self.instance, self.k, big_m)?;
        if self.symmetry {
            model.add_symmetry_breaking();
        }
        if self.cuts {
            model.add_valid_cuts()?;
        }
        for block in &self.blocks {
            model.add_block(&block.label)?;
        }
        Ok(model)
    }

    /// Orders schemes lexicographically non-increasing, `y^1 ⪰ y^2 ⪰ …`,
    /// through prefix-equality indicators `e_i` (`e_0 = 1`).
    pub fn add_symmetry_breaking(&mut self) {
        if self.k < 2 || self.symmetry {
            return;
        }
        self.symmetry = true;
        let n = self.instance.node_count();
        for s in 0..self.k - 1 {
            let (a, b) = (self.y[s].clone(), self.y[s + 1].clone());
            let mut prev: Option<VarId> = None;
            for i in 0..n {
                // a_i − b_i ≥ e_i − 1
                let mut first = vec![(a[i], 1.0), (b[i], -1.0)];
                if let Some(e) = prev {
                    first.push((e, -1.0));
                    self.milp.add_row(format!("lex{s}_{i}"), first, RowSense::Ge, -1.0);
                } else {
                    self.milp.add_row(format!("lex{s}_{i}"), first, RowSense::Ge, 0.0);
                }
                if i + 1 == n {
                    break;
                }
                let e = self.milp.add_continuous(format!("eq{s}_{}", i + 1), 0.0, 0.0, 1.0);
                // e_{i+1} = e_i ∧ (a_i = b_i), given a_i ≥ b_i whenever e_i = 1
                match prev {
                    Some(p) => {
                        self.milp.add_row(format!("eqmono{s}_{i}"), [(e, 1.0), (p, -1.0)], RowSense::Le, 0.0);
                        self.milp.add_row(
                            format!("eqlo{s}_{i}"),
                            [(e, 1.0), (p, -2.0), (a[i], 1.0), (b[i], -1.0)],
                            RowSense::Ge,
                            -1.0,
                        );
                    }
                    None => {
                        self.milp.add_row(format!("eqlo{s}_{i}"), [(e, 1.0), (a[i], 1.0), (b[i], -1.0)], RowSense::Ge, 1.0);
                    }
                }
                self.milp.add_row(format!("eqhi{s}_{i}"), [(e, 1.0), (a[i], 1.0), (b[i], -1.0)], RowSense::Le, 1.0);
                prev = Some(e);
            }
        }
    }

    /// Inequalities that leave the optimal value unchanged but tighten the
    /// relaxation: schemes claim only nodes that some selected monitor can
    /// reach, and, when `|Ξ|` is at most [`MAX_BOUND_SCENARIOS`], `τ` is at
    /// most the fair coverage of every single scenario.
    pub fn add_valid_cuts(&mut self) -> Result<()> {
        if self.cuts {
            return Ok(());
        }
        self.cuts = true;
        let inst = &self.instance;
        let n = inst.node_count();
        for (s, ys) in self.y.iter().enumerate() {
            for i in 0..n {
                let sources = inst.graph.in_neighbors(i).iter().map(|&v| (self.x[v], -1.0));
                self.milp.add_row(format!("reach{s}_{i}"), std::iter::once((ys[i], 1.0)).chain(sources), RowSense::Le, 0.0);
            }
        }
        if inst.uncertainty.enumeration_size() > MAX_BOUND_SCENARIOS {
            return Ok(());
        }
        for (s, xi) in inst.uncertainty.enumerate(MAX_BOUND_SCENARIOS)?.enumerate() {
            let cs: Vec<_> = (0..n).map(|i| self.milp.add_continuous(format!("cov{s}_{i}"), 0.0, 0.0, 1.0)).collect();
            for i in 0..n {
                let sources = inst.graph.in_neighbors(i).iter().filter(|&&v| xi.get(v)).map(|&v| (self.x[v], -1.0));
                self.milp.add_row(format!("cov{s}_{i}"), std::iter::once((cs[i], 1.0)).chain(sources), RowSense::Le, 0.0);
            }
            for c in 0..inst.groups.group_count() {
                if inst.floors[c] > 0 {
                    let members = inst.groups.members(c).iter().map(|&i| (cs[i], 1.0));
                    self.milp.add_row(format!("covfloor{s}_{c}"), members, RowSense::Ge, inst.floors[c] as f64);
                }
            }
            let epi = std::iter::once((self.tau, 1.0)).chain(cs.iter().map(|&v| (v, -1.0)));
            self.milp.add_row(format!("covepi{s}"), epi, RowSense::Le, 0.0);
        }
        Ok(())
    }

    pub fn has_valid_cuts(&self) -> bool {
        self.cuts
    }

    pub fn has_symmetry_breaking(&self) -> bool {
        self.symmetry
    }

    pub fn has_block(&self, label: &LabelVector) -> bool {
        self.index.contains_key(label)
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn labels(&self) -> impl Iterator<Item = &LabelVector> {
        self.blocks.iter().map(|b| &b.label)
    }

    /// Emits the block of `label`; returns `false` if it already exists.
    pub fn add_block(&mut self, label: &LabelVector) -> Result<bool> {
        let n = self.instance.node_count();
        if label.k() != self.k {
            return Err(Error::Input(format!("label {label} has {} entries, model K = {}", label.k(), self.k)));
        }
        label.check(n)?;
        if self.has_block(label) {
            return Ok(false);
        }
        let m = self.big_m;
        let tag = label.0.iter().map(|l| l.to_string()).collect::<Vec<_>>().join("_");
        let first_row = self.milp.lp.row_count();
        let (a, b) = self.instance.uncertainty.as_polyhedron();
        let graph = self.instance.graph.clone();
        let milp = &mut self.milp;

        let theta: Vec<_> = (0..n).map(|i| milp.add_continuous(format!("th{tag}_{i}"), 0.0, 0.0, m)).collect();
        let alpha: Vec<_> = (0..a.len()).map(|r| milp.add_continuous(format!("al{tag}_{r}"), 0.0, 0.0, m)).collect();
        let mut nu = vec![None; self.k];
        let mut beta = vec![None; self.k];
        let mut lambda = vec![None; self.k];

        // D(ℓ) and the per-column dual rows, accumulated term by term.
        let mut dual_obj: Vec<(VarId, f64)> = theta.iter().map(|&t| (t, -1.0)).collect();
        dual_obj.extend(alpha.iter().zip(&b).map(|(&v, &rhs)| (v, rhs)));
        let mut columns: Vec<Vec<(VarId, f64)>> = (0..n)
            .map(|i| {
                let mut col = vec![(theta[i], 1.0)];
                col.extend(a.iter().enumerate().map(|(r, row)| (alpha[r], -row[i])));
                col
            })
            .collect();
        let mut epigraph: Vec<(VarId, f64)> = Vec::new();

        for k in 0..self.k {
            match label.violated_node(k) {
                Some(node) => {
                    let v = milp.add_continuous(format!("nu{tag}_{k}"), 0.0, 0.0, m);
                    nu[k] = Some(v);
                    let r = linearize_product(milp, self.y[k][node], v, &format!("r{tag}_{k}"))?;
                    dual_obj.push((v, 1.0));
                    dual_obj.push((r, -1.0));
                    for &src in graph.in_neighbors(node) {
                        let p = linearize_product(milp, self.x[src], v, &format!("p{tag}_{k}_{src}"))?;
                        columns[src].push((p, 1.0));
                    }
                }
                None => {
                    let bs: Vec<_> =
                        (0..n).map(|i| milp.add_continuous(format!("be{tag}_{k}_{i}"), 0.0, 0.0, m)).collect();
                    let l = milp.add_continuous(format!("la{tag}_{k}"), 0.0, 0.0, 1.0);
                    for i in 0..n {
                        let s = linearize_product(milp, self.y[k][i], bs[i], &format!("s{tag}_{k}_{i}"))?;
                        dual_obj.push((s, 1.0));
                        let t = linearize_product(milp, self.y[k][i], l, &format!("t{tag}_{k}_{i}"))?;
                        epigraph.push((t, 1.0));
                    }
                    for src in 0..n {
                        let outs = graph.out_neighbors(src);
                        if outs.is_empty() {
                            continue;
                        }
                        let terms: Vec<_> = outs.iter().map(|&dst| (bs[dst], 1.0)).collect();
                        let q = linearize_product_expr(
                            milp,
                            self.x[src],
                            &terms,
                            m * outs.len() as f64,
                            &format!("q{tag}_{k}_{src}"),
                        )?;
                        columns[src].push((q, -1.0));
                    }
                    beta[k] = Some(bs);
                    lambda[k] = Some(l);
                }
            }
        }
        for (i, col) in columns.into_iter().enumerate() {
            milp.add_row(format!("col{tag}_{i}"), col, RowSense::Ge, 0.0);
        }
        if label.is_positive() {
            milp.add_row(format!("excl{tag}"), dual_obj, RowSense::Ge, 1.0);
        } else {
            let simplex = lambda.iter().flatten().map(|&l| (l, 1.0));
            milp.add_row(format!("simplex{tag}"), simplex, RowSense::Eq, 1.0);
            let row = std::iter::once((self.tau, 1.0))
                .chain(dual_obj.into_iter().map(|(v, c)| (v, -c)))
                .chain(epigraph.into_iter().map(|(v, c)| (v, -c)));
            milp.add_row(format!("epi{tag}"), row, RowSense::Le, 0.0);
        }
        let rows = first_row..milp.lp.row_count();
        self.index.insert(label.clone(), self.blocks.len());
        self.blocks.push(Block { label: label.clone(), theta, alpha, nu, beta, lambda, rows });
        Ok(true)
    }

    pub fn stats(&self) -> ModelStats {
        let lplus = self.blocks.iter().filter(|b| b.label.is_positive()).count();
        ModelStats {
            k: self.k,
            blocks: self.blocks.len(),
            blocks_l0: self.blocks.len() - lplus,
            blocks_lplus: lplus,
            rows: self.milp.lp.row_count(),
            columns: self.milp.lp.var_count(),
            binaries: self.milp.integer_count(),
            nonzeros: self.milp.lp.nonzero_count(),
            big_m: self.big_m,
            symmetry_breaking: self.symmetry,
        }
    }

    pub fn solve(&self, opts: &MilpOptions) -> SolveReport {
        let opts = MilpOptions { integral_objective: true, ..opts.clone() };
        solve_milp(&self.milp, &opts)
    }

    /// Rounds the first-stage columns of a solved model. Does not audit.
    pub fn read_solution(&self, report: &SolveReport) -> Result<KAdaptSolution> {
        let values = report
            .solution
            .as_ref()
            .ok_or_else(|| Error::Solver(format!("no solution available (status {:?})", report.status)))?;
        let bit = |v: VarId| values[v.0] > 0.5;
        let n = self.instance.node_count();
        let x = MonitorSet((0..n).map(|i| bit(self.x[i])).collect());
        let schemes = self.y.iter().map(|ys| CoveringScheme(ys.iter().map(|&v| bit(v)).collect())).collect();
        Ok(KAdaptSolution { x, schemes, tau: values[self.tau.0].round().max(0.0) as usize })
    }

    /// Reads an optimal solution and certifies it: `x ∈ X`, every scheme in
    /// `Y`, and the true K-adaptable value by enumeration is at least `τ`.
    pub fn extract_solution(&self, report: &SolveReport, cap: u128) -> Result<KAdaptSolution> {
        if report.status != SolveStatus::Optimal {
            return Err(Error::Solver(format!("model not solved to optimality ({:?})", report.status)));
        }
        let sol = self.read_solution(report)?;
        audit_solution(&self.instance, &sol, cap)?;
        Ok(sol)
    }
}

/// The K-adaptability model with one scheme per scenario (`K = |Ξ|`),
/// written directly over the enumerated scenarios instead of label blocks.
/// Schemes are continuous: for integral `x` the best one is the coverage
/// indicator, which is integral.
#[derive(Debug, Clone)]
pub struct ScenarioModel {
    pub instance: Instance,
    pub milp: MilpModel,
    pub tau: VarId,
    pub x: Vec<VarId>,
    pub y: Vec<Vec<VarId>>,
    pub scenarios: Vec<Scenario>,
}

impl ScenarioModel {
    pub fn build(instance: &Instance, cap: u128) -> Result<Self> {
        let n = instance.node_count();
        let scenarios = instance.uncertainty.scenarios(cap)?;
        let mut milp = MilpModel::new(Direction::Maximize);
        let tau = milp.add_integer("tau", 1.0, 0.0, n as f64);
        let x: Vec<_> = (0..n).map(|i| milp.add_binary(format!("x{i}"), 0.0)).collect();
        milp.add_row("budget", x.iter().map(|&v| (v, 1.0)), RowSense::Le, instance.budget as f64);
        let mut y = Vec::with_capacity(scenarios.len());
        for (s, xi) in scenarios.iter().enumerate() {
            let ys: Vec<_> = (0..n).map(|i| milp.add_continuous(format!("y{s}_{i}"), 0.0, 0.0, 1.0)).collect();
            for i in 0..n {
                let sources = instance.graph.in_neighbors(i).iter().filter(|&&v| xi.get(v)).map(|&v| (x[v], -1.0));
                milp.add_row(format!("cov{s}_{i}"), std::iter::once((ys[i], 1.0)).chain(sources), RowSense::Le, 0.0);
            }
            for c in 0..instance.groups.group_count() {
                if instance.floors[c] > 0 {
                    let members = instance.groups.members(c).iter().map(|&i| (ys[i], 1.0));
                    milp.add_row(format!("floor{s}_{c}"), members, RowSense::Ge, instance.floors[c] as f64);
                }
            }
            let epi = std::iter::once((tau, 1.0)).chain(ys.iter().map(|&v| (v, -1.0)));
            milp.add_row(format!("epi{s}"), epi, RowSense::Le, 0.0);
            y.push(ys);
        }
        Ok(Self { instance: instance.clone(), milp, tau, x, y, scenarios })
    }

    pub fn solve(&self, opts: &MilpOptions) -> SolveReport {
        let opts = MilpOptions { integral_objective: true, ..opts.clone() };
        solve_milp(&self.milp, &opts)
    }

    /// Monitor set plus one coverage-indicator scheme per scenario, audited
    /// like [`KAdaptModel::extract_solution`].
    pub fn extract_solution(&self, report: &SolveReport, cap: u128) -> Result<KAdaptSolution> {
        if report.status != SolveStatus::Optimal {
            return Err(Error::Solver(format!("model not solved to optimality ({:?})", report.status)));
        }
        let values = report.solution.as_ref().ok_or_else(|| Error::Solver("missing solution".into()))?;
        let n = self.instance.node_count();
        let x = MonitorSet((0..n).map(|i| values[self.x[i].0] > 0.5).collect());
        let schemes = self
            .scenarios
            .iter()
            .map(|xi| coverage_indicator(&self.instance.graph, &x, xi))
            .collect::<Result<Vec<_>>>()?;
        let sol = KAdaptSolution { x, schemes, tau: values[self.tau.0].round().max(0.0) as usize };
        audit_solution(&self.instance, &sol, cap)?;
        Ok(sol)
    }
}

/// Worst case over Ξ of the best feasible scheme's size, with the
/// minimizing scenario's failure set. `None` if some scenario leaves every
/// scheme infeasible.
pub fn adaptive_value(
    instance: &Instance,
    x: &MonitorSet,
    schemes: &[CoveringScheme],
    cap: u128,
) -> Result<Option<(usize, Vec<usize>)>> {
    let n = instance.node_count();
    let mut worst: Option<(usize, Vec<usize>)> = None;
    for failed in instance.uncertainty.effective_failures(x, cap)? {
        let xi = Scenario::with_failures(n, &failed);
        let counts = cover_counts(&instance.graph, x, &xi)?;
        let best = schemes
            .iter()
            .filter(|y| (0..n).all(|i| !y.get(i) || counts[i] > 0))
            .map(|y| y.count_ones())
            .max();
        match best {
            None => return Ok(None),
            Some(v) if worst.as_ref().is_none_or(|(w, _)| v < *w) => worst = Some((v, failed)),
            Some(_) => {}
        }
    }
    Ok(worst)
}

pub(crate) fn audit_solution(instance: &Instance, sol: &KAdaptSolution, cap: u128) -> Result<()> {
    if !sol.x.within_budget(instance.budget) {
        return Err(Error::Audit(format!("{} monitors exceed budget {}", sol.x.count_ones(), instance.budget)));
    }
    for (k, y) in sol.schemes.iter().enumerate() {
        if !y.meets_floors(&instance.groups, &instance.floors) {
            return Err(Error::Audit(format!("scheme {k} misses a fairness floor")));
        }
    }
    match adaptive_value(instance, &sol.x, &sol.schemes, cap)? {
        Some((v, _)) if v >= sol.tau => {}
        Some((v, failed)) => {
            return Err(Error::Audit(format!(
                "model value {} exceeds the enumerated value {v} (failures {failed:?}); dual caps too small",
                sol.tau
            )))
        }
        None => return Err(Error::Audit("some scenario leaves every scheme infeasible".into())),
    }
    let worst = crate::baselines::evaluate_worst_case(&instance.graph, &instance.groups, &sol.x, &instance.uncertainty, cap)?;
    if worst.total < sol.tau {
        return Err(Error::Audit(format!("worst-case coverage {} below model value {}", worst.total, sol.tau)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{Graph, GroupPartition};

    fn star(n: usize) -> Graph {
        Graph::new(n, (1..n).flat_map(|i| [(0, i), (i, 0)])).unwrap()
    }

    #[test]
    fn block_counts() {
        let g = Graph::new(2, [(0, 1)]).unwrap();
        let inst = Instance::with_budget(g, GroupPartition::single(2), 1, 0).unwrap();
        let m = KAdaptModel::build_full(&inst, &KAdaptConfig::new(1)).unwrap();
        let s = m.stats();
        assert_eq!((s.blocks, s.blocks_l0, s.blocks_lplus), (3, 1, 2));
        let g = Graph::empty(4).unwrap();
        let inst = Instance::with_budget(g, GroupPartition::single(4), 1, 0).unwrap();
        let s = KAdaptModel::build_full(&inst, &KAdaptConfig::new(2)).unwrap().stats();
        assert_eq!((s.blocks, s.blocks_lplus), (25, 16));
    }

    #[test]
    fn block_cap_refuses() {
        let inst = Instance::with_budget(Graph::empty(9).unwrap(), GroupPartition::single(9), 1, 0).unwrap();
        let cfg = KAdaptConfig { block_cap: 50, ..KAdaptConfig::new(2) };
        assert!(matches!(
            KAdaptModel::build_full(&inst, &cfg),
            Err(Error::CapExceeded { count: 100, .. })
        ));
    }

    #[test]
    fn star_two_adaptable() {
        let inst = Instance::with_budget(star(5), GroupPartition::single(5), 2, 1).unwrap();
        let m = KAdaptModel::build_full(&inst, &KAdaptConfig::new(2)).unwrap();
        let r = m.solve(&MilpOptions::default());
        assert_eq!(r.objective, Some(1.0));
        let sol = m.extract_solution(&r, 1000).unwrap();
        assert_eq!(sol.tau, 1);
    }

    #[test]
    fn single_scenario_matches_coverage() {
        let g = Graph::new(4, [(0, 1), (0, 2), (1, 2), (3, 2)]).unwrap();
        let inst = Instance::with_budget(g.clone(), GroupPartition::single(4), 1, 0).unwrap();
        let m = KAdaptModel::build_full(&inst, &KAdaptConfig::new(1)).unwrap();
        let r = m.solve(&MilpOptions::default());
        let sol = m.extract_solution(&r, 1000).unwrap();
        let cov = crate::netmodel::total_coverage(&g, &sol.x, &crate::netmodel::Scenario::ones(4)).unwrap();
        assert_eq!(sol.tau, cov);
        assert_eq!(sol.tau, 2);
    }

    #[test]
    fn uncoverable_floor_is_infeasible() {
        let g = Graph::new(3, [(0, 1)]).unwrap();
        let groups = GroupPartition::new(vec![0, 0, 1]).unwrap();
        let inst = Instance::with_budget(g, groups, 2, 0).unwrap().with_w(1.0).unwrap();
        let m = KAdaptModel::build_full(&inst, &KAdaptConfig::new(1)).unwrap();
        assert_eq!(m.solve(&MilpOptions::default()).status, SolveStatus::Infeasible);
    }

    #[test]
    fn lex_order_forbids_increasing_pair() {
        let inst = Instance::with_budget(Graph::empty(2).unwrap(), GroupPartition::single(2), 1, 0).unwrap();
        let mut m = KAdaptModel::master(&inst, 2, 20.0).unwrap();
        m.add_symmetry_breaking();
        let fixed = |m: &KAdaptModel, y1: [f64; 2], y2: [f64; 2]| {
            let mut milp = m.milp.clone();
            for i in 0..2 {
                milp.lp.lower[m.y[0][i].0] = y1[i];
                milp.lp.upper[m.y[0][i].0] = y1[i];
                milp.lp.lower[m.y[1][i].0] = y2[i];
                milp.lp.upper[m.y[1][i].0] = y2[i];
            }
            solve_milp(&milp, &MilpOptions::default()).status
        };
        assert_eq!(fixed(&m, [0.0, 1.0], [1.0, 0.0]), SolveStatus::Infeasible);
        assert_eq!(fixed(&m, [1.0, 0.0], [0.0, 1.0]), SolveStatus::Optimal);
        assert_eq!(fixed(&m, [1.0, 1.0], [1.0, 1.0]), SolveStatus::Optimal);
        assert_eq!(fixed(&m, [0.0, 0.0], [0.0, 1.0]), SolveStatus::Infeasible);
    }
}
