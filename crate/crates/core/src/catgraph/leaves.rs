use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use super::{CategoryGraph, EdgeKind};

/// For every category `c`, the pages that reach `c` through one membership
/// edge followed by any number of inclusion edges.
///
/// Categories on a common inclusion cycle share one leaf set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafSetIndex {
    category_ids: Vec<u64>,
    component: Vec<usize>,
    sets: Vec<Vec<u64>>,
}

impl LeafSetIndex {
    /// Sorted page ids, or `None` for an unknown category.
    pub fn leaves(&self, category: u64) -> Option<&[u64]> {
        let i = self.category_ids.binary_search(&category).ok()?;
        Some(&self.sets[self.component[i]])
    }

    pub fn category_ids(&self) -> &[u64] {
        &self.category_ids
    }
}

/// Condenses the inclusion subgraph into strongly connected components and
/// unions leaf sets upward in topological order.
pub fn leaf_sets(graph: &CategoryGraph) -> LeafSetIndex {
    let category_ids: Vec<u64> = graph.categories().map(|c| c.id).collect();
    let pos = |id: u64| category_ids.binary_search(&id).expect("edge to unknown category");

    let mut direct: Vec<Vec<u64>> = vec![Vec::new(); category_ids.len()];
    let mut inclusion: DiGraph<(), ()> = DiGraph::with_capacity(category_ids.len(), 0);
    for _ in &category_ids {
        inclusion.add_node(());
    }
    for e in graph.edges() {
        match e.kind {
            EdgeKind::Membership => direct[pos(e.to.id)].push(e.from.id),
            EdgeKind::Inclusion => {
                inclusion.add_edge(NodeIndex::new(pos(e.from.id)), NodeIndex::new(pos(e.to.id)), ());
            }
        }
    }

    // tarjan_scc yields components in reverse topological order of the
    // child -> parent edges, i.e. parents first. Children must be finished
    // before their parents, so walk it backwards.
    let mut sccs = tarjan_scc(&inclusion);
    sccs.reverse();
    let mut component = vec![usize::MAX; category_ids.len()];
    for (k, scc) in sccs.iter().enumerate() {
        for n in scc {
            component[n.index()] = k;
        }
    }

    let mut children: Vec<Vec<usize>> = vec![Vec::new(); sccs.len()];
    for e in inclusion.raw_edges() {
        let (a, b) = (component[e.source().index()], component[e.target().index()]);
        if a != b {
            debug_assert!(a < b, "components out of topological order");
            children[b].push(a);
        }
    }

    let mut sets: Vec<Vec<u64>> = Vec::with_capacity(sccs.len());
    for (k, scc) in sccs.iter().enumerate() {
        let mut set: Vec<u64> = Vec::new();
        for n in scc {
            set.extend_from_slice(&direct[n.index()]);
        }
        for &child in &children[k] {
            set.extend_from_slice(&sets[child]);
        }
        set.sort_unstable();
        set.dedup();
        sets.push(set);
    }

    LeafSetIndex { category_ids, component, sets }
}
