//! Coverage graph, protected-group partition and the coverage semantics.
//!
//! A directed edge `(v, n)` means that a monitor placed at `v` covers `n`.
//! Node `n` is covered under availability `xi` when at least one of its
//! in-neighbours is both selected and available.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Directed coverage graph on nodes `0..N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    in_adj: Vec<Vec<usize>>,
    out_adj: Vec<Vec<usize>>,
    edge_count: usize,
}

impl Graph {
    /// Builds a graph from `(source, target)` pairs. Duplicate edges are
    /// merged; self-loops and out-of-range endpoints are rejected.
    pub fn new(node_count: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::Input("graph must have at least one node".into()));
        }
        let mut in_adj = vec![Vec::new(); node_count];
        let mut out_adj = vec![Vec::new(); node_count];
        for (i, (v, n)) in edges.into_iter().enumerate() {
            if v >= node_count || n >= node_count {
                return Err(Error::Input(format!(
                    "edge {i} ({v}, {n}) references a node outside 0..{node_count}"
                )));
            }
            if v == n {
                return Err(Error::Input(format!("edge {i} is a self-loop on node {v}")));
            }
            out_adj[v].push(n);
            in_adj[n].push(v);
        }
        let mut edge_count = 0;
        for list in in_adj.iter_mut().chain(out_adj.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        for list in &out_adj {
            edge_count += list.len();
        }
        Ok(Self { in_adj, out_adj, edge_count })
    }

    /// Graph without edges.
    pub fn empty(node_count: usize) -> Result<Self> {
        Self::new(node_count, std::iter::empty())
    }

    pub fn node_count(&self) -> usize {
        self.in_adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// `delta(n)`: the nodes that can cover `n`, sorted ascending.
    pub fn in_neighbors(&self, n: usize) -> &[usize] {
        &self.in_adj[n]
    }

    /// The nodes covered by a monitor at `v`, sorted ascending.
    pub fn out_neighbors(&self, v: usize) -> &[usize] {
        &self.out_adj[v]
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.out_adj[v].len()
    }

    pub fn has_edge(&self, v: usize, n: usize) -> bool {
        self.out_adj[v].binary_search(&n).is_ok()
    }

    /// All edges in `(source, target)` order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out_adj
            .iter()
            .enumerate()
            .flat_map(|(v, outs)| outs.iter().map(move |&n| (v, n)))
    }

    /// Adds the reverse of every edge.
    pub fn symmetrized(&self) -> Graph {
        let edges: Vec<_> = self.edges().flat_map(|(v, n)| [(v, n), (n, v)]).collect();
        Graph::new(self.node_count(), edges).expect("reversing valid edges stays valid")
    }

    /// Whether every edge has its reverse.
    pub fn is_symmetric(&self) -> bool {
        self.edges().all(|(v, n)| self.has_edge(n, v))
    }

    fn check_len(&self, what: &str, len: usize) -> Result<()> {
        if len != self.node_count() {
            return Err(Error::Input(format!(
                "{what} has length {len}, graph has {} nodes",
                self.node_count()
            )));
        }
        Ok(())
    }
}

/// Disjoint, exhaustive partition of the nodes into protected groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPartition {
    group_of: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl GroupPartition {
    /// `group_of[n]` must lie in `0..C` and every group must be nonempty.
    pub fn new(group_of: Vec<usize>) -> Result<Self> {
        if group_of.is_empty() {
            return Err(Error::Input("partition of an empty node set".into()));
        }
        let groups = group_of.iter().max().map_or(0, |&g| g + 1);
        let mut members = vec![Vec::new(); groups];
        for (n, &g) in group_of.iter().enumerate() {
            members[g].push(n);
        }
        if let Some(c) = members.iter().position(Vec::is_empty) {
            return Err(Error::Input(format!("group {c} has no members")));
        }
        Ok(Self { group_of, members })
    }

    /// Every node in one group.
    pub fn single(node_count: usize) -> Self {
        Self::new(vec![0; node_count]).expect("single group is valid for N >= 1")
    }

    pub fn group_count(&self) -> usize {
        self.members.len()
    }

    pub fn node_count(&self) -> usize {
        self.group_of.len()
    }

    pub fn group_of(&self, n: usize) -> usize {
        self.group_of[n]
    }

    pub fn members(&self, c: usize) -> &[usize] {
        &self.members[c]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.members.iter().map(Vec::len).collect()
    }

    pub fn size(&self, c: usize) -> usize {
        self.members[c].len()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.group_of
    }
}

macro_rules! binary_vector {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub Vec<bool>);

        impl $name {
            pub fn zeros(len: usize) -> Self {
                Self(vec![false; len])
            }

            pub fn ones(len: usize) -> Self {
                Self(vec![true; len])
            }

            /// Vector of length `len` with ones exactly at `indices`.
            pub fn from_indices(len: usize, indices: &[usize]) -> Self {
                let mut v = vec![false; len];
                for &i in indices {
                    v[i] = true;
                }
                Self(v)
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            pub fn get(&self, i: usize) -> bool {
                self.0[i]
            }

            pub fn set(&mut self, i: usize, value: bool) {
                self.0[i] = value;
            }

            pub fn count_ones(&self) -> usize {
                self.0.iter().filter(|&&b| b).count()
            }

            /// Positions holding a one, ascending.
            pub fn indices(&self) -> Vec<usize> {
                self.0.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
            }

            pub fn as_slice(&self) -> &[bool] {
                &self.0
            }
        }
    };
}

binary_vector!(
    /// Selected monitors `x`.
    MonitorSet
);
binary_vector!(
    /// Node availability `xi` (`true` = available).
    Scenario
);
binary_vector!(
    /// A candidate covering scheme `y`: the nodes it counts as covered.
    CoveringScheme
);

impl MonitorSet {
    /// Membership in `X = { x : e'x <= I }`.
    pub fn within_budget(&self, budget: usize) -> bool {
        self.count_ones() <= budget
    }
}

impl Scenario {
    /// Scenario where exactly the nodes in `failed` are unavailable.
    pub fn with_failures(len: usize, failed: &[usize]) -> Self {
        let mut v = vec![true; len];
        for &f in failed {
            v[f] = false;
        }
        Self(v)
    }

    pub fn failures(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, &b)| !b).map(|(i, _)| i).collect()
    }
}

impl CoveringScheme {
    /// Whether the scheme meets every per-group floor (set `Y` membership).
    pub fn meets_floors(&self, groups: &GroupPartition, floors: &[usize]) -> bool {
        (0..groups.group_count()).all(|c| {
            groups.members(c).iter().filter(|&&n| self.0[n]).count() >= floors[c]
        })
    }

    /// Whether `y_n <= sum_{v in delta(n)} xi_v x_v` holds for every node.
    pub fn dominated_by(&self, covered: &[bool]) -> bool {
        self.0.iter().zip(covered).all(|(&y, &c)| !y || c)
    }
}

/// Number of available selected in-neighbours of each node.
pub fn cover_counts(g: &Graph, x: &MonitorSet, xi: &Scenario) -> Result<Vec<usize>> {
    g.check_len("monitor vector", x.len())?;
    g.check_len("scenario", xi.len())?;
    Ok((0..g.node_count())
        .map(|n| g.in_neighbors(n).iter().filter(|&&v| x.0[v] && xi.0[v]).count())
        .collect())
}

/// `y(x, xi)`: node `n` is covered iff some in-neighbour is selected and available.
pub fn coverage_indicator(g: &Graph, x: &MonitorSet, xi: &Scenario) -> Result<CoveringScheme> {
    Ok(CoveringScheme(
        cover_counts(g, x, xi)?.into_iter().map(|c| c >= 1).collect(),
    ))
}

/// `F_G(x, xi)`: total number of covered nodes.
pub fn total_coverage(g: &Graph, x: &MonitorSet, xi: &Scenario) -> Result<usize> {
    Ok(coverage_indicator(g, x, xi)?.count_ones())
}

/// `F_{G,c}(x, xi)` for every group `c`.
pub fn group_coverage(
    g: &Graph,
    p: &GroupPartition,
    x: &MonitorSet,
    xi: &Scenario,
) -> Result<Vec<usize>> {
    if p.node_count() != g.node_count() {
        return Err(Error::Input(format!(
            "partition covers {} nodes, graph has {}",
            p.node_count(),
            g.node_count()
        )));
    }
    let y = coverage_indicator(g, x, xi)?;
    Ok((0..p.group_count())
        .map(|c| p.members(c).iter().filter(|&&n| y.0[n]).count())
        .collect())
}

/// Integer coverage floor per group for fraction `w`: `ceil(w |N_c| - 1e-9)`.
pub fn fairness_floors(groups: &GroupPartition, w: f64) -> Vec<usize> {
    groups
        .sizes()
        .into_iter()
        .map(|s| floor_for(w, s))
        .collect()
}

pub(crate) fn floor_for(w: f64, size: usize) -> usize {
    let raw = (w * size as f64 - 1e-9).ceil();
    if raw <= 0.0 {
        0
    } else {
        raw as usize
    }
}

/// A graph, its group partition and the external node ids it was read with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    pub graph: Graph,
    pub groups: GroupPartition,
    /// External id of every internal node.
    pub node_ids: Vec<i64>,
    /// External label of every internal group.
    pub group_ids: Vec<i64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeRecord {
    id: i64,
    group: i64,
}

#[derive(Debug, Serialize, Deserialize)]
struct NetworkFile {
    nodes: Vec<NodeRecord>,
    edges: Vec<[i64; 2]>,
    #[serde(default = "default_directed")]
    directed: bool,
}

fn default_directed() -> bool {
    true
}

impl Network {
    /// Network whose external ids equal the internal indices.
    pub fn from_parts(graph: Graph, groups: GroupPartition) -> Result<Self> {
        if graph.node_count() != groups.node_count() {
            return Err(Error::Input(format!(
                "partition covers {} nodes, graph has {}",
                groups.node_count(),
                graph.node_count()
            )));
        }
        let node_ids = (0..graph.node_count() as i64).collect();
        let group_ids = (0..groups.group_count() as i64).collect();
        Ok(Self { graph, groups, node_ids, group_ids })
    }

    /// Parses the graph JSON format. Undirected files, or `symmetrize`,
    /// materialize both directions of every edge.
    pub fn from_json_str(text: &str, symmetrize: bool) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(text)?;
        if file.nodes.is_empty() {
            return Err(Error::Input("nodes: list is empty".into()));
        }
        let mut index = BTreeMap::new();
        for (i, node) in file.nodes.iter().enumerate() {
            if index.insert(node.id, i).is_some() {
                return Err(Error::Input(format!("nodes[{i}]: duplicate id {}", node.id)));
            }
        }
        let labels: Vec<i64> = {
            let mut l: Vec<i64> = file.nodes.iter().map(|n| n.group).collect();
            l.sort_unstable();
            l.dedup();
            l
        };
        let group_of = file
            .nodes
            .iter()
            .map(|n| labels.binary_search(&n.group).expect("label collected above"))
            .collect();
        let mut edges = Vec::with_capacity(file.edges.len());
        for (i, [v, n]) in file.edges.iter().copied().enumerate() {
            let lookup = |id: i64| {
                index.get(&id).copied().ok_or_else(|| {
                    Error::Input(format!("edges[{i}]: unknown node id {id}"))
                })
            };
            let (a, b) = (lookup(v)?, lookup(n)?);
            if a == b {
                return Err(Error::Input(format!("edges[{i}]: self-loop on node id {v}")));
            }
            edges.push((a, b));
        }
        let mut graph = Graph::new(file.nodes.len(), edges)?;
        if symmetrize || !file.directed {
            graph = graph.symmetrized();
        }
        Ok(Self {
            graph,
            groups: GroupPartition::new(group_of)?,
            node_ids: file.nodes.iter().map(|n| n.id).collect(),
            group_ids: labels,
        })
    }

    pub fn read(path: &Path, symmetrize: bool) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text, symmetrize).map_err(|e| match e {
            Error::Json(j) => Error::Input(format!("{}: {j}", path.display())),
            Error::Input(m) => Error::Input(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Serializes to the graph JSON format (always `"directed": true`,
    /// with every stored edge written out).
    pub fn to_json_string(&self) -> Result<String> {
        let file = NetworkFile {
            nodes: (0..self.graph.node_count())
                .map(|n| NodeRecord {
                    id: self.node_ids[n],
                    group: self.group_ids[self.groups.group_of(n)],
                })
                .collect(),
            edges: self
                .graph
                .edges()
                .map(|(v, n)| [self.node_ids[v], self.node_ids[n]])
                .collect(),
            directed: true,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Graph {
        Graph::new(3, [(0, 1), (1, 2)]).unwrap()
    }

    fn star5() -> Graph {
        Graph::new(5, (1..5).flat_map(|i| [(0, i), (i, 0)])).unwrap()
    }

    #[test]
    fn path_single_monitor() {
        let g = path3();
        let y = coverage_indicator(&g, &MonitorSet::from_indices(3, &[0]), &Scenario::ones(3)).unwrap();
        assert_eq!(y.0, vec![false, true, false]);
        assert_eq!(y.count_ones(), 1);
    }

    #[test]
    fn no_monitors_covers_nothing() {
        let g = star5();
        let y = coverage_indicator(&g, &MonitorSet::zeros(5), &Scenario::ones(5)).unwrap();
        assert_eq!(y.count_ones(), 0);
    }

    #[test]
    fn star_with_failed_center() {
        let g = star5();
        let x = MonitorSet::from_indices(5, &[0, 1]);
        let xi = Scenario::with_failures(5, &[0]);
        let y = coverage_indicator(&g, &x, &xi).unwrap();
        assert_eq!(y.indices(), vec![0]);
        let groups = GroupPartition::new(vec![0, 1, 1, 1, 1]).unwrap();
        assert_eq!(group_coverage(&g, &groups, &x, &xi).unwrap(), vec![1, 0]);
    }

    #[test]
    fn group_coverage_on_path() {
        let g = path3();
        let groups = GroupPartition::new(vec![0, 1, 2]).unwrap();
        let x = MonitorSet::from_indices(3, &[0]);
        assert_eq!(group_coverage(&g, &groups, &x, &Scenario::ones(3)).unwrap(), vec![0, 1, 0]);
        let single = GroupPartition::single(3);
        assert_eq!(group_coverage(&g, &single, &x, &Scenario::ones(3)).unwrap(), vec![1]);
    }

    #[test]
    fn dimension_mismatch_is_input_error() {
        let g = path3();
        let err = coverage_indicator(&g, &MonitorSet::zeros(2), &Scenario::ones(3)).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn self_loops_rejected() {
        assert!(matches!(Graph::new(2, [(1, 1)]), Err(Error::Input(_))));
    }

    #[test]
    fn empty_group_rejected() {
        assert!(GroupPartition::new(vec![0, 2]).is_err());
    }

    #[test]
    fn in_neighbors_match_edges() {
        let g = star5();
        for n in 0..5 {
            let expected: Vec<usize> = g.edges().filter(|&(_, t)| t == n).map(|(v, _)| v).collect();
            assert_eq!(g.in_neighbors(n), expected.as_slice());
        }
    }

    #[test]
    fn floors_round_up_with_slack() {
        let groups = GroupPartition::new(vec![0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1, 1]).unwrap();
        assert_eq!(fairness_floors(&groups, 0.25), vec![1, 2]);
        assert_eq!(fairness_floors(&groups, 0.0), vec![0, 0]);
        assert_eq!(fairness_floors(&groups, 0.26), vec![2, 3]);
    }

    #[test]
    fn json_maps_external_ids() {
        let text = r#"{"nodes":[{"id":1,"group":5},{"id":2,"group":7},{"id":3,"group":5}],
                       "edges":[[1,2],[2,3]],"directed":false}"#;
        let net = Network::from_json_str(text, false).unwrap();
        assert_eq!(net.graph.edge_count(), 4);
        assert_eq!(net.groups.assignment(), &[0, 1, 0]);
        assert!(net.graph.has_edge(1, 0));
        let again = Network::from_json_str(&net.to_json_string().unwrap(), false).unwrap();
        assert_eq!(again, net);
    }

    #[test]
    fn json_errors_carry_location() {
        let bad = r#"{"nodes":[{"id":1,"group":0}],"edges":[[1,9]]}"#;
        let msg = Network::from_json_str(bad, false).unwrap_err().to_string();
        assert!(msg.contains("edges[0]"), "{msg}");
        let broken = "{\"nodes\": [\n  {\"id\": 1,, }]}";
        let msg = Network::from_json_str(broken, false).unwrap_err().to_string();
        assert!(msg.contains("line 2"), "{msg}");
    }
}
