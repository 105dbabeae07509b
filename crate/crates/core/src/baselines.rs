//! Exact worst-case evaluation of a fixed monitor set and the two
//! heuristic placements used for comparison.

use serde::Serialize;

use crate::error::Result;
use crate::instance::Instance;
use crate::netmodel::{cover_counts, Graph, GroupPartition, MonitorSet, Scenario};
use crate::uncertainty::UncertaintySet;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupWorstCase {
    pub group: usize,
    pub size: usize,
    pub covered: usize,
    /// Failed monitors of a minimizing scenario.
    pub failures: Vec<usize>,
}

impl GroupWorstCase {
    pub fn fraction(&self) -> f64 {
        self.covered as f64 / self.size as f64
    }

    pub fn percent(&self) -> f64 {
        100.0 * self.fraction()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub total: usize,
    pub total_failures: Vec<usize>,
    /// Each group minimized on its own.
    pub groups: Vec<GroupWorstCase>,
    pub scenarios: usize,
}

impl EvaluationReport {
    /// Smallest worst-case coverage fraction over the groups.
    pub fn worst_group_fraction(&self) -> f64 {
        self.groups.iter().map(GroupWorstCase::fraction).fold(f64::INFINITY, f64::min)
    }
}

/// Minimum over Ξ of total coverage and, independently, of every group's
/// coverage. Only failures among selected monitors are enumerated.
pub fn evaluate_worst_case(
    g: &Graph,
    p: &GroupPartition,
    x: &MonitorSet,
    u: &UncertaintySet,
    cap: u128,
) -> Result<EvaluationReport> {
    let n = g.node_count();
    let patterns = u.effective_failures(x, cap)?;
    let mut total: Option<(usize, Vec<usize>)> = None;
    let mut groups: Vec<Option<(usize, Vec<usize>)>> = vec![None; p.group_count()];
    for failed in &patterns {
        let counts = cover_counts(g, x, &Scenario::with_failures(n, failed))?;
        let mut per_group = vec![0usize; p.group_count()];
        for (i, &c) in counts.iter().enumerate() {
            if c > 0 {
                per_group[p.group_of(i)] += 1;
            }
        }
        let t: usize = per_group.iter().sum();
        if total.as_ref().is_none_or(|(best, _)| t < *best) {
            total = Some((t, failed.clone()));
        }
        for (slot, &v) in groups.iter_mut().zip(&per_group) {
            if slot.as_ref().is_none_or(|(best, _)| v < *best) {
                *slot = Some((v, failed.clone()));
            }
        }
    }
    // An empty pattern list means Ξ is empty; report full coverage of nothing.
    let (total, total_failures) = total.unwrap_or((0, Vec::new()));
    let groups = groups
        .into_iter()
        .enumerate()
        .map(|(c, slot)| {
            let (covered, failures) = slot.unwrap_or((0, Vec::new()));
            GroupWorstCase { group: c, size: p.size(c), covered, failures }
        })
        .collect();
    Ok(EvaluationReport { total, total_failures, groups, scenarios: patterns.len() })
}

pub fn evaluate_instance(instance: &Instance, x: &MonitorSet, cap: u128) -> Result<EvaluationReport> {
    evaluate_worst_case(&instance.graph, &instance.groups, x, &instance.uncertainty, cap)
}

/// Adds, `I` times, the node whose addition maximizes worst-case total
/// coverage (ties to the smallest index).
pub fn greedy_robust(instance: &Instance, cap: u128) -> Result<MonitorSet> {
    let n = instance.node_count();
    let mut x = MonitorSet::zeros(n);
    for _ in 0..instance.monitors() {
        let mut best: Option<(usize, usize)> = None;
        for v in 0..n {
            if x.get(v) {
                continue;
            }
            x.set(v, true);
            let value = evaluate_instance(instance, &x, cap)?.total;
            x.set(v, false);
            if best.is_none_or(|(_, b)| value > b) {
                best = Some((v, value));
            }
        }
        match best {
            Some((v, _)) => x.set(v, true),
            None => break,
        }
    }
    Ok(x)
}

/// The `I` nodes of largest out-degree, ties to the smallest index.
pub fn degree_centrality(instance: &Instance) -> MonitorSet {
    let n = instance.node_count();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(instance.graph.out_degree(v)), v));
    MonitorSet::from_indices(n, &order[..instance.monitors()])
}
