//! The page/category digraph: memberships (page -> category) and
//! inclusions (category -> parent category).
//!
//! Built on top of it: leaf sets, categorical tfidf, category vectors,
//! relatedness edge weights, and two diagnostics (cycle census and degree
//! distribution).

mod cycles;
mod degrees;
mod leaves;
mod vectors;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusStore, NodeId};
use crate::textproc::TermId;

pub use cycles::{cycle_census, CensusMode, CycleHit, CycleReport};
pub use degrees::{degree_stats, fit_power_law, DegreeStats, FitWindow, PowerLawFit};
pub use leaves::{leaf_sets, LeafSetIndex};
pub use vectors::{
    build_category_vectors, categorical_tfidf, category_vector, read_weighted_edges, weight_edges,
    write_weighted_edges, CategoricalIdf, CategoryProfile, CategoryVectors, WeightedEdge,
};

#[derive(Debug, Error, PartialEq)]
pub enum CatGraphError {
    #[error("unknown category id {0}")]
    UnknownCategory(u64),
    #[error("term {term} does not occur in any leaf page of category {category}")]
    TermAbsent { term: TermId, category: u64 },
    #[error("no vector for node {0}")]
    MissingVector(NodeId),
    #[error("weighted edge file line {line}: {message}")]
    BadEdgeLine { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Membership,
    Inclusion,
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeKind::Membership => "membership",
            EdgeKind::Inclusion => "inclusion",
        })
    }
}

impl FromStr for EdgeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "membership" => Ok(EdgeKind::Membership),
            "inclusion" => Ok(EdgeKind::Inclusion),
            other => Err(format!("unknown edge kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GraphEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub kind: EdgeKind,
}

/// Nodes and edges in [`NodeId`] order; out-edges of a node are contiguous.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryGraph {
    root: NodeId,
    nodes: Vec<NodeId>,
    edges: Vec<GraphEdge>,
    /// `edges[offsets[i]..offsets[i + 1]]` leave `nodes[i]`.
    offsets: Vec<usize>,
}

impl CategoryGraph {
    /// Assembles a graph from raw parts, dropping duplicate edges. Edges
    /// must reference listed nodes; memberships must leave pages and enter
    /// categories, inclusions must join two categories.
    pub fn from_parts(root: NodeId, mut nodes: Vec<NodeId>, mut edges: Vec<GraphEdge>) -> Self {
        nodes.sort_unstable();
        nodes.dedup();
        edges.sort_unstable();
        edges.dedup_by(|a, b| a.from == b.from && a.to == b.to);
        debug_assert!(edges.iter().all(|e| match e.kind {
            EdgeKind::Membership => e.from.is_page() && !e.to.is_page(),
            EdgeKind::Inclusion => !e.from.is_page() && !e.to.is_page(),
        }));
        let mut offsets = Vec::with_capacity(nodes.len() + 1);
        let mut at = 0;
        for n in &nodes {
            offsets.push(at);
            while at < edges.len() && edges[at].from == *n {
                at += 1;
            }
        }
        offsets.push(at);
        assert_eq!(at, edges.len(), "edge source missing from node list");
        CategoryGraph { root, nodes, edges, offsets }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn node_index(&self, node: NodeId) -> Option<usize> {
        self.nodes.binary_search(&node).ok()
    }

    /// Edges leaving `node`, ordered by target.
    pub fn out_edges(&self, node: NodeId) -> &[GraphEdge] {
        match self.node_index(node) {
            Some(i) => &self.edges[self.offsets[i]..self.offsets[i + 1]],
            None => &[],
        }
    }

    pub fn categories(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().copied().filter(|n| !n.is_page())
    }

    pub fn pages(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().copied().filter(|n| n.is_page())
    }
}

/// One membership edge per (page, category) pair and one inclusion edge
/// per (child, parent) pair.
pub fn build_graph(store: &CorpusStore) -> CategoryGraph {
    let nodes = store
        .pages()
        .iter()
        .map(|p| NodeId::page(p.id))
        .chain(store.categories().iter().map(|c| NodeId::category(c.id)))
        .collect();
    let mut edges = Vec::with_capacity(store.membership_count());
    for p in store.pages() {
        for &c in &p.categories {
            edges.push(GraphEdge { from: NodeId::page(p.id), to: NodeId::category(c), kind: EdgeKind::Membership });
        }
    }
    for c in store.categories() {
        for &parent in &c.parents {
            edges.push(GraphEdge {
                from: NodeId::category(c.id),
                to: NodeId::category(parent),
                kind: EdgeKind::Inclusion,
            });
        }
    }
    CategoryGraph::from_parts(NodeId::category(store.root()), nodes, edges)
}
