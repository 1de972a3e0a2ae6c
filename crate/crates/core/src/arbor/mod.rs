//! Minimum-cost spanning arborescence of the reversed, relatedness-weighted
//! category graph, rooted at the top category.

mod brute;
mod edmonds;

use std::collections::{HashMap, VecDeque};
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catgraph::{CategoryGraph, WeightedEdge};
use crate::corpus::NodeId;

pub use brute::{brute_force_min_arborescence, BRUTE_FORCE_MAX_NODES};
pub use edmonds::chu_liu_edmonds;

/// At most ten ids, then a count of the rest.
fn join_nodes(nodes: &[NodeId]) -> String {
    let mut s = nodes.iter().take(10).map(|n| n.to_string()).collect::<Vec<_>>().join(", ");
    if nodes.len() > 10 {
        s.push_str(&format!(" and {} more", nodes.len() - 10));
    }
    s
}

#[derive(Debug, Error, PartialEq)]
pub enum ArborError {
    #[error("not reachable from the root: {}", join_nodes(.0))]
    Unreachable(Vec<NodeId>),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("edge {from} -> {to} has invalid cost {cost}")]
    InvalidCost { from: NodeId, to: NodeId, cost: f64 },
    #[error("no weight for graph edge {from} -> {to}")]
    MissingWeight { from: NodeId, to: NodeId },
    #[error("exhaustive search limited to {max} non-root nodes, got {got}")]
    TooLarge { got: usize, max: usize },
    #[error("arborescence file line {line}: {message}")]
    BadLine { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostEdge {
    pub from: usize,
    pub to: usize,
    pub cost: f64,
}

/// A digraph over dense node indices with non-negative finite costs.
/// `labels[i]` names node `i`; labels are sorted, so index order is id
/// order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootedCostDigraph {
    labels: Vec<NodeId>,
    root: usize,
    /// Sorted by (to, from); at most one edge per ordered pair.
    edges: Vec<CostEdge>,
}

impl RootedCostDigraph {
    /// Self-loops are dropped; parallel edges keep the cheapest cost.
    pub fn new(
        mut labels: Vec<NodeId>,
        root: NodeId,
        edges: impl IntoIterator<Item = (NodeId, NodeId, f64)>,
    ) -> Result<Self, ArborError> {
        labels.sort_unstable();
        labels.dedup();
        let index = |n: NodeId| labels.binary_search(&n).map_err(|_| ArborError::UnknownNode(n));
        let root_ix = index(root)?;
        let mut best: HashMap<(usize, usize), f64> = HashMap::new();
        for (from, to, cost) in edges {
            if !(cost.is_finite() && cost >= 0.0) {
                return Err(ArborError::InvalidCost { from, to, cost });
            }
            let (u, v) = (index(from)?, index(to)?);
            if u == v {
                continue;
            }
            best.entry((u, v)).and_modify(|c| *c = c.min(cost)).or_insert(cost);
        }
        let mut edges: Vec<CostEdge> = best.into_iter().map(|((from, to), cost)| CostEdge { from, to, cost }).collect();
        edges.sort_unstable_by_key(|e| (e.to, e.from));
        Ok(RootedCostDigraph { labels, root: root_ix, edges })
    }

    /// Nodes `0..n` labelled as categories `0..n`.
    pub fn from_indexed(n: usize, root: usize, edges: &[(usize, usize, f64)]) -> Result<Self, ArborError> {
        let labels = (0..n as u64).map(NodeId::category).collect();
        let label = |i: usize| NodeId::category(i as u64);
        RootedCostDigraph::new(labels, label(root), edges.iter().map(|&(u, v, c)| (label(u), label(v), c)))
    }

    pub fn labels(&self) -> &[NodeId] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn edges(&self) -> &[CostEdge] {
        &self.edges
    }

    /// Fails with every node that has no directed path from the root.
    pub fn check_reachable(&self) -> Result<(), ArborError> {
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); self.len()];
        for e in &self.edges {
            out[e.from].push(e.to);
        }
        let mut seen = vec![false; self.len()];
        seen[self.root] = true;
        let mut queue = VecDeque::from([self.root]);
        while let Some(u) = queue.pop_front() {
            for &v in &out[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        let missing: Vec<NodeId> = (0..self.len()).filter(|&i| !seen[i]).map(|i| self.labels[i]).collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(ArborError::Unreachable(missing))
        }
    }
}

/// Turns every membership/inclusion edge `u -> v` into `v -> u` with cost
/// `1 - p`, so the arborescence grows from the root down to the pages.
pub fn reverse_and_cost(
    graph: &CategoryGraph,
    weights: &[WeightedEdge],
    root: NodeId,
) -> Result<RootedCostDigraph, ArborError> {
    let by_pair: HashMap<(NodeId, NodeId), f64> = weights.iter().map(|w| ((w.from, w.to), w.cost)).collect();
    let mut reversed = Vec::with_capacity(graph.edges().len());
    for e in graph.edges() {
        let cost = *by_pair.get(&(e.from, e.to)).ok_or(ArborError::MissingWeight { from: e.from, to: e.to })?;
        reversed.push((e.to, e.from, cost));
    }
    RootedCostDigraph::new(graph.nodes().to_vec(), root, reversed)
}

/// A spanning arborescence: every non-root node has exactly one parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arborescence {
    labels: Vec<NodeId>,
    root: usize,
    /// `(parent index, edge cost)` per node; `None` only at the root.
    parent: Vec<Option<(usize, f64)>>,
    total_cost: f64,
}

impl Arborescence {
    pub(crate) fn from_parents(labels: Vec<NodeId>, root: usize, parent: Vec<Option<(usize, f64)>>) -> Self {
        let total_cost = parent.iter().flatten().map(|p| p.1).sum();
        Arborescence { labels, root, parent, total_cost }
    }

    pub fn root(&self) -> NodeId {
        self.labels[self.root]
    }

    pub fn total_cost(&self) -> f64 {
        self.total_cost
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Parent index per node index, `None` at the root.
    pub fn parent_indices(&self) -> Vec<Option<usize>> {
        self.parent.iter().map(|p| p.map(|p| p.0)).collect()
    }

    /// `(parent, cost)` of a node; `None` for the root.
    pub fn parent(&self, node: NodeId) -> Result<Option<(NodeId, f64)>, ArborError> {
        let i = self.index(node)?;
        Ok(self.parent[i].map(|(p, c)| (self.labels[p], c)))
    }

    /// Up to `k` successive parents of `node`, nearest first, ending early
    /// (with the root included) when the root is reached.
    pub fn ancestors(&self, node: NodeId, k: usize) -> Result<Vec<NodeId>, ArborError> {
        let mut at = self.index(node)?;
        let mut out = Vec::with_capacity(k);
        while out.len() < k {
            match self.parent[at] {
                Some((p, _)) => {
                    out.push(self.labels[p]);
                    at = p;
                }
                None => break,
            }
        }
        Ok(out)
    }

    fn index(&self, node: NodeId) -> Result<usize, ArborError> {
        self.labels.binary_search(&node).map_err(|_| ArborError::UnknownNode(node))
    }

    /// `node\tparent\tcost` rows in node order; the root row is
    /// `root\t-\t0`.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "node\tparent\tcost")?;
        for (i, label) in self.labels.iter().enumerate() {
            match self.parent[i] {
                Some((p, c)) => writeln!(out, "{label}\t{}\t{c:.16e}", self.labels[p])?,
                None => writeln!(out, "{label}\t-\t0")?,
            }
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(input: R) -> Result<Self, ArborError> {
        let mut rows: Vec<(NodeId, Option<(NodeId, f64)>)> = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line_no = i + 1;
            let bad = |message: String| ArborError::BadLine { line: line_no, message };
            let line = line.map_err(|e| bad(e.to_string()))?;
            if line.is_empty() || (i == 0 && line == "node\tparent\tcost") {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(bad(format!("expected 3 columns, found {}", cols.len())));
            }
            let node: NodeId = cols[0].parse().map_err(|e: String| bad(e))?;
            let parent = if cols[1] == "-" {
                None
            } else {
                let p: NodeId = cols[1].parse().map_err(|e: String| bad(e))?;
                let c: f64 = cols[2].parse::<f64>().map_err(|e| bad(e.to_string()))?;
                Some((p, c))
            };
            rows.push((node, parent));
        }
        rows.sort_by_key(|r| r.0);
        let labels: Vec<NodeId> = rows.iter().map(|r| r.0).collect();
        let bad = |message: String| ArborError::BadLine { line: 0, message };
        let roots: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].1.is_none()).collect();
        if roots.len() != 1 {
            return Err(bad(format!("expected exactly one root row, found {}", roots.len())));
        }
        let mut parent = Vec::with_capacity(rows.len());
        for (node, p) in &rows {
            parent.push(match p {
                Some((pn, c)) => {
                    let pi = labels.binary_search(pn).map_err(|_| ArborError::UnknownNode(*pn))?;
                    if pn == node {
                        return Err(bad(format!("{node} is its own parent")));
                    }
                    Some((pi, *c))
                }
                None => None,
            });
        }
        let arb = Arborescence::from_parents(labels, roots[0], parent);
        arb.validate()?;
        Ok(arb)
    }

    /// Every node must reach the root by following parents.
    pub fn validate(&self) -> Result<(), ArborError> {
        // 0 = unknown, 1 = on the current path, 2 = reaches the root, 3 = does not.
        let mut state = vec![0u8; self.len()];
        state[self.root] = 2;
        let mut bad = Vec::new();
        for start in 0..self.len() {
            let mut path = Vec::new();
            let mut at = start;
            let ok = loop {
                match state[at] {
                    2 => break true,
                    1 | 3 => break false,
                    _ => {}
                }
                state[at] = 1;
                path.push(at);
                match self.parent[at] {
                    Some((p, _)) => at = p,
                    None => break false,
                }
            };
            for &n in &path {
                state[n] = if ok { 2 } else { 3 };
            }
            if !ok {
                bad.push(self.labels[start]);
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(ArborError::Unreachable(bad))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catgraph::{EdgeKind, GraphEdge};

    #[test]
    fn reversal_of_single_membership() {
        let g = CategoryGraph::from_parts(
            NodeId::category(0),
            vec![NodeId::page(1), NodeId::category(0)],
            vec![GraphEdge { from: NodeId::page(1), to: NodeId::category(0), kind: EdgeKind::Membership }],
        );
        let w = [WeightedEdge {
            from: NodeId::page(1),
            to: NodeId::category(0),
            kind: EdgeKind::Membership,
            p: 0.4,
            cost: 1.0 - 0.4,
        }];
        let r = reverse_and_cost(&g, &w, NodeId::category(0)).unwrap();
        assert_eq!(r.edges().len(), 1);
        let e = r.edges()[0];
        assert_eq!((r.labels()[e.from], r.labels()[e.to]), (NodeId::category(0), NodeId::page(1)));
        assert!((e.cost - 0.6).abs() < 1e-15);
        assert_eq!(
            reverse_and_cost(&g, &[], NodeId::category(0)).unwrap_err(),
            ArborError::MissingWeight { from: NodeId::page(1), to: NodeId::category(0) }
        );
    }

    #[test]
    fn construction_collapses_and_drops() {
        let g = RootedCostDigraph::from_indexed(3, 0, &[(0, 1, 5.0), (0, 1, 2.0), (1, 1, 0.0), (1, 2, 1.0)]).unwrap();
        assert_eq!(g.edges(), &[CostEdge { from: 0, to: 1, cost: 2.0 }, CostEdge { from: 1, to: 2, cost: 1.0 }]);
        assert!(matches!(RootedCostDigraph::from_indexed(2, 0, &[(0, 1, -1.0)]), Err(ArborError::InvalidCost { .. })));
        assert!(matches!(RootedCostDigraph::from_indexed(2, 0, &[(0, 5, 1.0)]), Err(ArborError::UnknownNode(_))));
    }

    #[test]
    fn no_arborescence_without_a_dominating_vertex() {
        // 1 -> 2, 4 -> 2, 1 -> 3, 4 -> 3: no vertex reaches all others.
        let edges = [(0, 1, 1.0), (3, 1, 1.0), (0, 2, 1.0), (3, 2, 1.0)];
        for root in 0..4 {
            let g = RootedCostDigraph::from_indexed(4, root, &edges).unwrap();
            assert!(matches!(chu_liu_edmonds(&g), Err(ArborError::Unreachable(_))));
            assert!(matches!(brute_force_min_arborescence(&g), Err(ArborError::Unreachable(_))));
        }
        let g = RootedCostDigraph::from_indexed(4, 0, &edges).unwrap();
        assert_eq!(chu_liu_edmonds(&g).unwrap_err(), ArborError::Unreachable(vec![NodeId::category(3)]));
    }

    #[test]
    fn ancestors_along_chain() {
        // root -> c1 -> c2 -> page
        let labels = vec![NodeId::category(0), NodeId::category(1), NodeId::category(2), NodeId::page(9)];
        let g = RootedCostDigraph::new(
            labels,
            NodeId::category(0),
            [
                (NodeId::category(0), NodeId::category(1), 0.1),
                (NodeId::category(1), NodeId::category(2), 0.2),
                (NodeId::category(2), NodeId::page(9), 0.3),
            ],
        )
        .unwrap();
        let a = chu_liu_edmonds(&g).unwrap();
        assert_eq!(a.ancestors(NodeId::page(9), 2).unwrap(), vec![NodeId::category(2), NodeId::category(1)]);
        assert_eq!(
            a.ancestors(NodeId::page(9), 5).unwrap(),
            vec![NodeId::category(2), NodeId::category(1), NodeId::category(0)]
        );
        assert!(a.ancestors(NodeId::category(0), 3).unwrap().is_empty());
        assert_eq!(a.ancestors(NodeId::page(1), 1), Err(ArborError::UnknownNode(NodeId::page(1))));
    }

    #[test]
    fn tsv_round_trip() {
        let g = RootedCostDigraph::from_indexed(4, 2, &[(2, 0, 0.25), (0, 1, 1.0 / 3.0), (2, 3, 0.7), (3, 1, 0.1)])
            .unwrap();
        let a = chu_liu_edmonds(&g).unwrap();
        let mut buf = Vec::new();
        a.write_tsv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("c:2\t-\t0\n"));
        assert_eq!(Arborescence::read_tsv(&buf[..]).unwrap(), a);
    }

    #[test]
    fn read_rejects_cycles() {
        let text = "node\tparent\tcost\nc:0\t-\t0\nc:1\tc:2\t1\nc:2\tc:1\t1\n";
        assert!(matches!(Arborescence::read_tsv(text.as_bytes()), Err(ArborError::Unreachable(_))));
    }
}
