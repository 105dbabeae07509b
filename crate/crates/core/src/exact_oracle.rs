//! Brute-force ground truth for small instances.
//!
//! Node sets are `u64` bitmasks, so instances are limited to 64 nodes; the
//! enumeration cap keeps them far smaller in practice.

use std::collections::HashMap;

use itertools::Itertools;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::netmodel::MonitorSet;
use crate::uncertainty::binomial;

pub const DEFAULT_ORACLE_CAP: u128 = 10_000_000;

#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    /// Bound on `#monitor sets · |Ξ|`.
    pub cap: u128,
    /// Enumerate every monitor set of size at most `I` instead of exactly `I`.
    pub exhaustive: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { cap: DEFAULT_ORACLE_CAP, exhaustive: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecourseEntry {
    pub failures: Vec<usize>,
    /// `None` when no admissible covering scheme exists under this scenario.
    pub value: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleResult {
    /// `None` when every monitor set violates a floor in some scenario.
    pub optimum: Option<usize>,
    pub x: Option<MonitorSet>,
    /// Recourse value of the returned `x` under every ξ ∈ Ξ.
    pub recourse: Vec<RecourseEntry>,
    pub monitor_sets: u128,
    pub scenarios: usize,
}

impl OracleResult {
    pub fn is_feasible(&self) -> bool {
        self.optimum.is_some()
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Recourse {
    Plain,
    Fair,
    TwoStage,
}

struct Tables {
    n: usize,
    in_mask: Vec<u64>,
    group_masks: Vec<u64>,
    floors: Vec<usize>,
    failure_masks: Vec<u64>,
    failure_sets: Vec<Vec<usize>>,
}

impl Tables {
    fn new(instance: &Instance, cap: u128) -> Result<Self> {
        let n = instance.node_count();
        if n > 64 {
            return Err(Error::Input(format!("oracle handles at most 64 nodes, got {n}")));
        }
        let in_mask = (0..n)
            .map(|i| instance.graph.in_neighbors(i).iter().fold(0u64, |m, &v| m | 1 << v))
            .collect();
        let group_masks = (0..instance.groups.group_count())
            .map(|c| instance.groups.members(c).iter().fold(0u64, |m, &v| m | 1 << v))
            .collect();
        let failure_sets: Vec<Vec<usize>> = instance.uncertainty.enumerate(cap)?.map(|xi| xi.failures()).collect();
        let failure_masks = failure_sets.iter().map(|f| f.iter().fold(0u64, |m, &v| m | 1 << v)).collect();
        Ok(Self { n, in_mask, group_masks, floors: instance.floors.clone(), failure_masks, failure_sets })
    }

    fn covered(&self, available: u64) -> u64 {
        (0..self.n).filter(|&i| self.in_mask[i] & available != 0).fold(0u64, |m, i| m | 1 << i)
    }

    fn meets_floors(&self, set: u64) -> bool {
        self.group_masks.iter().zip(&self.floors).all(|(&g, &f)| (set & g).count_ones() as usize >= f)
    }

    /// Largest `y ⊆ covered` meeting the floors, by enumerating submasks.
    fn best_scheme(&self, covered: u64, memo: &mut HashMap<u64, Option<usize>>) -> Option<usize> {
        if let Some(&v) = memo.get(&covered) {
            return v;
        }
        let mut best: Option<usize> = None;
        let mut sub = covered;
        loop {
            if self.meets_floors(sub) {
                let size = sub.count_ones() as usize;
                if best.is_none_or(|b| size > b) {
                    best = Some(size);
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & covered;
        }
        memo.insert(covered, best);
        best
    }

    fn recourse(&self, kind: Recourse, x: u64, fail: u64, memo: &mut HashMap<u64, Option<usize>>) -> Option<usize> {
        let covered = self.covered(x & !fail);
        match kind {
            Recourse::Plain => Some(covered.count_ones() as usize),
            Recourse::Fair => self.meets_floors(covered).then_some(covered.count_ones() as usize),
            Recourse::TwoStage => self.best_scheme(covered, memo),
        }
    }
}

fn solve(instance: &Instance, kind: Recourse, opts: &OracleOptions) -> Result<OracleResult> {
    let n = instance.node_count();
    let i = instance.monitors();
    let sizes: Vec<usize> = if opts.exhaustive { (0..=i).collect() } else { vec![i] };
    let monitor_sets: u128 = sizes.iter().map(|&s| binomial(n, s)).sum();
    let work = monitor_sets.saturating_mul(instance.uncertainty.enumeration_size());
    if work > opts.cap {
        return Err(Error::CapExceeded { what: "oracle enumeration", count: work, cap: opts.cap });
    }
    let tables = Tables::new(instance, opts.cap)?;
    let mut memo = HashMap::new();
    let mut best: Option<(usize, u64)> = None;
    for size in sizes {
        for set in (0..n).combinations(size) {
            let x = set.iter().fold(0u64, |m, &v| m | 1 << v);
            let mut worst: Option<usize> = None;
            let mut improves = true;
            for &fail in &tables.failure_masks {
                match tables.recourse(kind, x, fail, &mut memo) {
                    None => {
                        improves = false;
                        break;
                    }
                    Some(v) => {
                        if worst.is_none_or(|w| v < w) {
                            worst = Some(v);
                        }
                        if best.is_some_and(|(b, _)| v <= b) {
                            // Cannot strictly beat the incumbent.
                            improves = false;
                            break;
                        }
                    }
                }
            }
            if !improves {
                continue;
            }
            if let Some(w) = worst {
                if best.is_none_or(|(b, _)| w > b) {
                    best = Some((w, x));
                }
            }
        }
    }
    let scenarios = tables.failure_masks.len();
    Ok(match best {
        None => OracleResult { optimum: None, x: None, recourse: Vec::new(), monitor_sets, scenarios },
        Some((value, x)) => {
            let recourse = tables
                .failure_masks
                .iter()
                .zip(&tables.failure_sets)
                .map(|(&fail, set)| RecourseEntry {
                    failures: set.clone(),
                    value: tables.recourse(kind, x, fail, &mut memo),
                })
                .collect();
            let indices: Vec<usize> = (0..n).filter(|&v| x >> v & 1 == 1).collect();
            OracleResult {
                optimum: Some(value),
                x: Some(MonitorSet::from_indices(n, &indices)),
                recourse,
                monitor_sets,
                scenarios,
            }
        }
    })
}

/// `max_{x ∈ X} min_{ξ ∈ Ξ} F_G(x, ξ)`, ignoring the instance floors.
pub fn solve_rc(instance: &Instance, opts: &OracleOptions) -> Result<OracleResult> {
    let plain = Instance { floors: vec![0; instance.groups.group_count()], ..instance.clone() };
    solve(&plain, Recourse::Plain, opts)
}

/// As [`solve_rc`] restricted to monitor sets whose coverage meets every
/// group floor under every scenario. Floors come from `w`.
pub fn solve_rc_fair(instance: &Instance, w: f64, opts: &OracleOptions) -> Result<OracleResult> {
    solve(&instance.clone().with_w(w)?, Recourse::Fair, opts)
}

/// Two-stage value: the adversary picks ξ, then the best covering scheme
/// `y ∈ Y` dominated by the coverage indicator is chosen.
pub fn solve_two_stage(instance: &Instance, w: f64, opts: &OracleOptions) -> Result<OracleResult> {
    solve(&instance.clone().with_w(w)?, Recourse::TwoStage, opts)
}

/// [`solve_rc_fair`] / [`solve_two_stage`] with the instance's own floors.
pub fn solve_rc_floors(instance: &Instance, opts: &OracleOptions) -> Result<OracleResult> {
    solve(instance, Recourse::Fair, opts)
}

pub fn solve_two_stage_floors(instance: &Instance, opts: &OracleOptions) -> Result<OracleResult> {
    solve(instance, Recourse::TwoStage, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{Graph, GroupPartition};

    fn star() -> Graph {
        Graph::new(5, (1..5).flat_map(|i| [(0, i), (i, 0)])).unwrap()
    }

    #[test]
    fn star_rc() {
        let inst = Instance::with_budget(star(), GroupPartition::single(5), 2, 1).unwrap();
        let r = solve_rc(&inst, &OracleOptions::default()).unwrap();
        assert_eq!(r.optimum, Some(1));
        assert_eq!(r.recourse.len(), 6);
        assert_eq!(r.recourse.iter().filter_map(|e| e.value).min(), Some(1));
    }

    #[test]
    fn path_rc() {
        let g = Graph::new(3, [(0, 1), (1, 0), (1, 2), (2, 1)]).unwrap();
        let inst = Instance::with_budget(g, GroupPartition::single(3), 1, 0).unwrap();
        let r = solve_rc(&inst, &OracleOptions::default()).unwrap();
        assert_eq!(r.optimum, Some(2));
        assert_eq!(r.x.unwrap().indices(), vec![1]);
    }

    #[test]
    fn empty_graph_rc() {
        let inst = Instance::with_budget(Graph::empty(4).unwrap(), GroupPartition::single(4), 2, 1).unwrap();
        assert_eq!(solve_rc(&inst, &OracleOptions::default()).unwrap().optimum, Some(0));
    }

    #[test]
    fn fairness_only_constrains() {
        let g = Graph::new(6, [(0, 1), (0, 2), (0, 3), (4, 5), (1, 0)]).unwrap();
        let p = GroupPartition::new(vec![0, 0, 0, 0, 1, 1]).unwrap();
        let inst = Instance::with_budget(g, p, 1, 0).unwrap();
        let o = OracleOptions::default();
        assert_eq!(solve_rc(&inst, &o).unwrap().optimum, Some(3));
        assert_eq!(solve_rc_fair(&inst, 0.0, &o).unwrap().optimum, Some(3));
        assert_eq!(solve_rc_fair(&inst, 0.5, &o).unwrap().optimum, None);
        assert_eq!(solve_two_stage(&inst, 0.5, &o).unwrap().optimum, None);
        let two = Instance { budget: 2, ..inst };
        assert_eq!(solve_rc_fair(&two, 0.5, &o).unwrap().optimum, Some(4));
        assert_eq!(solve_two_stage(&two, 0.5, &o).unwrap().optimum, Some(4));
    }

    #[test]
    fn exhaustive_mode_agrees() {
        let inst = Instance::with_budget(star(), GroupPartition::single(5), 2, 1).unwrap();
        let a = solve_rc(&inst, &OracleOptions::default()).unwrap();
        let b = solve_rc(&inst, &OracleOptions { exhaustive: true, ..Default::default() }).unwrap();
        assert_eq!(a.optimum, b.optimum);
        assert!(b.monitor_sets > a.monitor_sets);
    }

    #[test]
    fn cap_refuses() {
        let inst = Instance::with_budget(Graph::empty(30).unwrap(), GroupPartition::single(30), 5, 2).unwrap();
        assert!(matches!(
            solve_rc(&inst, &OracleOptions::default()),
            Err(Error::CapExceeded { .. })
        ));
    }
}
