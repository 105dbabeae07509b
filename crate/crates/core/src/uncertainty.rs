//! Node-availability uncertainty sets and the label partition of the
//! scenario space.
//!
//! Scenarios are enumerated by number of failures and then
//! lexicographically by the set of failed nodes, so the all-available
//! scenario always comes first.

use std::fmt;
use std::path::Path;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::{cover_counts, CoveringScheme, Graph, MonitorSet, Scenario};
use crate::solver_kernel::{solve_lp, Direction, LpModel, RowSense, SolveStatus};

pub const DEFAULT_SCENARIO_CAP: u128 = 1_000_000;

const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SetKind {
    /// At most `J` nodes unavailable.
    Budget(usize),
    /// Binary points of `{ξ ∈ [0,1]^N : Aξ ≥ b}` with `A ≥ 0`.
    Polyhedral { a: Vec<Vec<f64>>, b: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintySet {
    n: usize,
    kind: SetKind,
}

#[derive(Deserialize)]
struct PolyhedronFile {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

fn subsets_up_to(n: usize, max: usize) -> u128 {
    (0..=max.min(n)).map(|j| binomial(n, j)).fold(0u128, u128::saturating_add)
}

impl UncertaintySet {
    pub fn budget(n: usize, j: usize) -> Self {
        Self { n, kind: SetKind::Budget(j) }
    }

    /// Polyhedral set; rejected unless `A` is entrywise nonnegative, which
    /// certifies upward closedness.
    pub fn polyhedral(n: usize, a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::Input(format!("A has {} rows but b has {} entries", a.len(), b.len())));
        }
        for (r, row) in a.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Input(format!("A[{r}] has {} columns, expected {n}", row.len())));
            }
            if let Some((c, v)) = row.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
                return Err(Error::Input(format!(
                    "A[{r}][{c}] = {v}: coefficients must be finite and nonnegative (upward closedness)"
                )));
            }
        }
        if let Some((r, v)) = b.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Input(format!("b[{r}] = {v} is not finite")));
        }
        Ok(Self { n, kind: SetKind::Polyhedral { a, b } })
    }

    pub fn from_json_str(text: &str, n: usize) -> Result<Self> {
        let file: PolyhedronFile = serde_json::from_str(text)
            .map_err(|e| Error::Input(format!("uncertainty set, line {} column {}: {e}", e.line(), e.column())))?;
        Self::polyhedral(n, file.a, file.b)
    }

    pub fn read(path: &Path, n: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text, n).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    /// Failure budget of a budget set.
    pub fn failure_budget(&self) -> Option<usize> {
        match self.kind {
            SetKind::Budget(j) => Some(j),
            SetKind::Polyhedral { .. } => None,
        }
    }

    /// `(A, b)` describing the set, with a budget set mapped to the single
    /// row `e'ξ ≥ N − J`.
    pub fn as_polyhedron(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        match &self.kind {
            SetKind::Budget(j) => (vec![vec![1.0; self.n]], vec![self.n as f64 - *j as f64]),
            SetKind::Polyhedral { a, b } => (a.clone(), b.clone()),
        }
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::Input(format!("scenario has length {len}, uncertainty set {}", self.n)));
        }
        Ok(())
    }

    fn contains_unchecked(&self, xi: &[bool]) -> bool {
        match &self.kind {
            SetKind::Budget(j) => xi.iter().filter(|&&v| !v).count() <= *j,
            SetKind::Polyhedral { a, b } => a.iter().zip(b).all(|(row, &rhs)| {
                let lhs: f64 = row.iter().zip(xi).filter(|(_, &v)| v).map(|(c, _)| c).sum();
                lhs >= rhs - MEMBERSHIP_TOL * (1.0 + rhs.abs())
            }),
        }
    }

    pub fn contains(&self, xi: &Scenario) -> Result<bool> {
        self.check_len(xi.len())?;
        Ok(self.contains_unchecked(xi.as_slice()))
    }

    /// Failure sets with `e − 1_F ∈ Ξ` for `F ⊆ among`.
    fn failure_sets(&self, among: Vec<usize>, cap: u128, what: &'static str) -> Result<FailureSets<'_>> {
        let max = match self.kind {
            SetKind::Budget(j) => j.min(among.len()),
            SetKind::Polyhedral { .. } => among.len(),
        };
        let count = subsets_up_to(among.len(), max);
        if count > cap {
            return Err(Error::CapExceeded { what, count, cap });
        }
        let n = self.n;
        let sets = (0..=max).flat_map(move |j| among.clone().into_iter().combinations(j));
        Ok(Box::new(sets.filter(move |f| {
            let xi = Scenario::with_failures(n, f);
            self.contains_unchecked(xi.as_slice())
        })))
    }

    /// Number of candidate scenarios enumeration has to visit.
    pub fn enumeration_size(&self) -> u128 {
        match self.kind {
            SetKind::Budget(j) => subsets_up_to(self.n, j),
            SetKind::Polyhedral { .. } => subsets_up_to(self.n, self.n),
        }
    }

    /// Every ξ ∈ Ξ exactly once; refuses when more than `cap` candidates
    /// would be visited.
    pub fn enumerate(&self, cap: u128) -> Result<impl Iterator<Item = Scenario> + '_> {
        let n = self.n;
        Ok(self
            .failure_sets((0..n).collect(), cap, "scenario enumeration")?
            .map(move |f| Scenario::with_failures(n, &f)))
    }

    pub fn scenarios(&self, cap: u128) -> Result<Vec<Scenario>> {
        Ok(self.enumerate(cap)?.collect())
    }

    /// Failure patterns restricted to the selected monitors. Coverage only
    /// depends on which monitors fail, and by upward closedness the pattern
    /// `F` is realizable iff `e − 1_F ∈ Ξ`.
    pub fn effective_failures(&self, x: &MonitorSet, cap: u128) -> Result<Vec<Vec<usize>>> {
        self.check_len(x.len())?;
        Ok(self.failure_sets(x.indices(), cap, "effective scenario enumeration")?.collect())
    }

    pub fn effective_scenarios(&self, x: &MonitorSet, cap: u128) -> Result<Vec<Scenario>> {
        Ok(self
            .effective_failures(x, cap)?
            .into_iter()
            .map(|f| Scenario::with_failures(self.n, &f))
            .collect())
    }
}

type FailureSets<'a> = Box<dyn Iterator<Item = Vec<usize>> + 'a>;

/// Per-scheme feasibility fingerprint: entry `k` is 0 when scheme `k` is
/// feasible and `n + 1` when it claims node `n` without coverage.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelVector(pub Vec<usize>);

impl LabelVector {
    pub fn k(&self) -> usize {
        self.0.len()
    }

    /// Member of L₊: no scheme is feasible.
    pub fn is_positive(&self) -> bool {
        self.0.iter().all(|&l| l > 0)
    }

    /// Schemes labelled feasible.
    pub fn feasible_schemes(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &l)| l == 0).map(|(k, _)| k)
    }

    /// Violated node of scheme `k`, if any.
    pub fn violated_node(&self, k: usize) -> Option<usize> {
        self.0[k].checked_sub(1)
    }

    pub fn check(&self, n: usize) -> Result<()> {
        match self.0.iter().find(|&&l| l > n) {
            Some(l) => Err(Error::Input(format!("label entry {l} outside 0..={n}"))),
            None => Ok(()),
        }
    }

    pub fn block_count(n: usize, k: usize) -> u128 {
        (n as u128 + 1).saturating_pow(k as u32)
    }

    /// All of {0..N}^K, first entry most significant.
    pub fn all(n: usize, k: usize) -> impl Iterator<Item = LabelVector> {
        let mut next = Some(vec![0usize; k]);
        std::iter::from_fn(move || {
            let current = next.take()?;
            let mut succ = current.clone();
            if let Some(pos) = succ.iter().rposition(|&l| l < n) {
                succ[pos] += 1;
                succ[pos + 1..].iter_mut().for_each(|l| *l = 0);
                next = Some(succ);
            }
            Some(LabelVector(current))
        })
    }
}

impl fmt::Display for LabelVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.0.iter().join(","))
    }
}

fn check_schemes(g: &Graph, x: &MonitorSet, ys: &[CoveringScheme]) -> Result<()> {
    if x.len() != g.node_count() {
        return Err(Error::Input(format!("monitor vector has length {}, graph {}", x.len(), g.node_count())));
    }
    if let Some((k, y)) = ys.iter().enumerate().find(|(_, y)| y.len() != g.node_count()) {
        return Err(Error::Input(format!("scheme {k} has length {}, graph {}", y.len(), g.node_count())));
    }
    Ok(())
}

fn labels_from_counts(counts: &[usize], ys: &[CoveringScheme]) -> LabelVector {
    LabelVector(
        ys.iter()
            .map(|y| {
                (0..counts.len())
                    .find(|&n| y.get(n) && counts[n] == 0)
                    .map_or(0, |n| n + 1)
            })
            .collect(),
    )
}

/// Label of ξ: smallest uncovered-but-claimed node per scheme.
pub fn label_of(
    u: &UncertaintySet,
    g: &Graph,
    x: &MonitorSet,
    ys: &[CoveringScheme],
    xi: &Scenario,
) -> Result<LabelVector> {
    check_schemes(g, x, ys)?;
    if !u.contains(xi)? {
        return Err(Error::Input(format!("scenario with failures {:?} is not in the uncertainty set", xi.failures())));
    }
    Ok(labels_from_counts(&cover_counts(g, x, xi)?, ys))
}

fn in_cell_counts(counts: &[usize], ys: &[CoveringScheme], label: &LabelVector) -> bool {
    ys.iter().zip(&label.0).all(|(y, &l)| match l {
        0 => (0..counts.len()).all(|n| !y.get(n) || counts[n] > 0),
        l => y.get(l - 1) && counts[l - 1] == 0,
    })
}

/// Membership of ξ in the cell Ξ(x, y, ℓ): every nonzero entry names a
/// violated constraint (not necessarily the first) and every zero entry a
/// feasible scheme.
pub fn in_cell(
    u: &UncertaintySet,
    g: &Graph,
    x: &MonitorSet,
    ys: &[CoveringScheme],
    label: &LabelVector,
    xi: &Scenario,
) -> Result<bool> {
    check_schemes(g, x, ys)?;
    Ok(u.contains(xi)? && in_cell_counts(&cover_counts(g, x, xi)?, ys, label))
}

fn check_label(g: &Graph, ys: &[CoveringScheme], label: &LabelVector) -> Result<()> {
    if label.k() != ys.len() {
        return Err(Error::Input(format!("label has {} entries for {} schemes", label.k(), ys.len())));
    }
    label.check(g.node_count())
}

/// Emptiness of Ξ(x, y, ℓ) by scenario enumeration.
pub fn cell_empty_integer(
    u: &UncertaintySet,
    g: &Graph,
    x: &MonitorSet,
    ys: &[CoveringScheme],
    label: &LabelVector,
    cap: u128,
) -> Result<bool> {
    check_schemes(g, x, ys)?;
    check_label(g, ys, label)?;
    for xi in u.enumerate(cap)? {
        if in_cell_counts(&cover_counts(g, x, &xi)?, ys, label) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Emptiness of the continuous relaxation over `T ∩ [0,1]^N`, decided by
/// an LP feasibility problem.
pub fn cell_empty_relaxed(
    u: &UncertaintySet,
    g: &Graph,
    x: &MonitorSet,
    ys: &[CoveringScheme],
    label: &LabelVector,
) -> Result<bool> {
    check_schemes(g, x, ys)?;
    check_label(g, ys, label)?;
    let n = g.node_count();
    let mut lp = LpModel::new(Direction::Minimize);
    let xi: Vec<_> = (0..n).map(|i| lp.add_var(format!("xi{i}"), 0.0, 0.0, 1.0)).collect();
    let (a, b) = u.as_polyhedron();
    for (r, (row, rhs)) in a.iter().zip(&b).enumerate() {
        lp.add_row(format!("T{r}"), row.iter().enumerate().map(|(i, &c)| (xi[i], c)), RowSense::Ge, *rhs);
    }
    let covered_by = |node: usize| g.in_neighbors(node).iter().filter(|&&v| x.get(v)).map(|&v| (xi[v], 1.0));
    for (k, (y, &l)) in ys.iter().zip(&label.0).enumerate() {
        if l > 0 {
            let node = l - 1;
            let rhs = if y.get(node) { 0.0 } else { -1.0 };
            lp.add_row(format!("viol{k}"), covered_by(node), RowSense::Le, rhs);
        } else {
            for node in (0..n).filter(|&m| y.get(m)) {
                lp.add_row(format!("feas{k}_{node}"), covered_by(node), RowSense::Ge, 1.0);
            }
        }
    }
    let report = solve_lp(&lp);
    match report.status {
        SolveStatus::Optimal => Ok(false),
        SolveStatus::Infeasible => Ok(true),
        other => Err(Error::Solver(format!("relaxed cell check ended with {other:?}"))),
    }
}
