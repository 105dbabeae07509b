//! A complete problem instance: network, groups, uncertainty, budget and
//! fairness floors.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::netmodel::{fairness_floors, Graph, GroupPartition, Network};
use crate::uncertainty::UncertaintySet;

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub graph: Graph,
    pub groups: GroupPartition,
    pub uncertainty: UncertaintySet,
    /// Monitor budget `I`.
    pub budget: usize,
    /// Per-group minimum number of covered nodes.
    pub floors: Vec<usize>,
    /// Fraction the floors were derived from, if any.
    pub w: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceSummary {
    pub nodes: usize,
    pub edges: usize,
    pub groups: Vec<usize>,
    pub budget: usize,
    pub failure_budget: Option<usize>,
    pub floors: Vec<usize>,
    pub w: Option<f64>,
}

impl Instance {
    /// Instance without fairness floors.
    pub fn new(graph: Graph, groups: GroupPartition, uncertainty: UncertaintySet, budget: usize) -> Result<Self> {
        let n = graph.node_count();
        if groups.node_count() != n {
            return Err(Error::Input(format!("partition covers {} nodes, graph has {n}", groups.node_count())));
        }
        if uncertainty.node_count() != n {
            return Err(Error::Input(format!(
                "uncertainty set is over {} nodes, graph has {n}",
                uncertainty.node_count()
            )));
        }
        let floors = vec![0; groups.group_count()];
        Ok(Self { graph, groups, uncertainty, budget, floors, w: Some(0.0) })
    }

    /// Budget-uncertainty instance.
    pub fn with_budget(graph: Graph, groups: GroupPartition, budget: usize, failures: usize) -> Result<Self> {
        let n = graph.node_count();
        Self::new(graph, groups, UncertaintySet::budget(n, failures), budget)
    }

    pub fn from_network(net: &Network, uncertainty: UncertaintySet, budget: usize) -> Result<Self> {
        Self::new(net.graph.clone(), net.groups.clone(), uncertainty, budget)
    }

    /// Floors `⌈W·|N_c|⌉` for every group.
    pub fn with_w(mut self, w: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::Input(format!("fairness fraction {w} outside [0, 1]")));
        }
        self.floors = fairness_floors(&self.groups, w);
        self.w = Some(w);
        Ok(self)
    }

    pub fn with_floors(mut self, floors: Vec<usize>) -> Result<Self> {
        if floors.len() != self.groups.group_count() {
            return Err(Error::Input(format!(
                "{} floors for {} groups",
                floors.len(),
                self.groups.group_count()
            )));
        }
        self.floors = floors;
        self.w = None;
        Ok(self)
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    /// Effective budget `min(I, N)`.
    pub fn monitors(&self) -> usize {
        self.budget.min(self.node_count())
    }

    pub fn has_floors(&self) -> bool {
        self.floors.iter().any(|&f| f > 0)
    }

    /// A floor larger than its group can never be met.
    pub fn floors_attainable(&self) -> bool {
        self.floors.iter().enumerate().all(|(c, &f)| f <= self.groups.size(c))
    }

    pub fn summary(&self) -> InstanceSummary {
        InstanceSummary {
            nodes: self.node_count(),
            edges: self.graph.edge_count(),
            groups: self.groups.sizes(),
            budget: self.budget,
            failure_budget: self.uncertainty.failure_budget(),
            floors: self.floors.clone(),
            w: self.w,
        }
    }
}
