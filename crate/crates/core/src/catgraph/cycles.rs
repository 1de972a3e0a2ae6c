use std::collections::{BTreeMap, HashMap};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::CategoryGraph;
use crate::corpus::{NodeId, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CensusMode {
    /// Every directed 2-cycle and 3-cycle among inclusion edges.
    Exact,
    /// One walk per page: follow a fixed pseudo-random parent at every node
    /// until the walk reaches the root, a node without parents, or revisits
    /// a category.
    Walk { seed: u64 },
}

/// A cycle of categories, rotated to start at its smallest id, with the
/// number of walks that ended in it (1 in exact mode).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleHit {
    pub categories: Vec<u64>,
    pub hits: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleReport {
    /// Sorted by (length, categories).
    pub cycles: Vec<CycleHit>,
    pub walks: u64,
    pub reached_root: u64,
    pub ended_in_cycle: u64,
    pub dead_ends: u64,
}

impl CycleReport {
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# walks\t{}", self.walks)?;
        writeln!(out, "# reached_root\t{}", self.reached_root)?;
        writeln!(out, "# ended_in_cycle\t{}", self.ended_in_cycle)?;
        writeln!(out, "# dead_ends\t{}", self.dead_ends)?;
        writeln!(out, "length\thits\tcycle")?;
        for c in &self.cycles {
            let ids: Vec<String> = c.categories.iter().map(|id| NodeId::category(*id).to_string()).collect();
            writeln!(out, "{}\t{}\t{}", c.categories.len(), c.hits, ids.join(" > "))?;
        }
        Ok(())
    }
}

pub fn cycle_census(graph: &CategoryGraph, mode: CensusMode) -> CycleReport {
    match mode {
        CensusMode::Exact => exact(graph),
        CensusMode::Walk { seed } => walk(graph, seed),
    }
}

fn parents(graph: &CategoryGraph, node: NodeId) -> impl Iterator<Item = u64> + '_ {
    graph.out_edges(node).iter().map(|e| e.to.id)
}

fn has_inclusion(graph: &CategoryGraph, from: u64, to: u64) -> bool {
    graph.out_edges(NodeId::category(from)).binary_search_by_key(&NodeId::category(to), |e| e.to).is_ok()
}

fn exact(graph: &CategoryGraph) -> CycleReport {
    let mut cycles = Vec::new();
    for a in graph.categories() {
        for b in parents(graph, a).filter(|&b| b > a.id) {
            if has_inclusion(graph, b, a.id) {
                cycles.push(CycleHit { categories: vec![a.id, b], hits: 1 });
            }
            for c in parents(graph, NodeId::category(b)).filter(|&c| c > a.id) {
                if has_inclusion(graph, c, a.id) {
                    cycles.push(CycleHit { categories: vec![a.id, b, c], hits: 1 });
                }
            }
        }
    }
    cycles.sort_by(|x, y| x.categories.len().cmp(&y.categories.len()).then(x.categories.cmp(&y.categories)));
    CycleReport { cycles, ..CycleReport::default() }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// The parent a walk takes at `node`; depends only on the node and seed.
fn chosen_parent(graph: &CategoryGraph, node: NodeId, seed: u64) -> Option<u64> {
    let out = graph.out_edges(node);
    if out.is_empty() {
        return None;
    }
    let kind_bit = match node.kind {
        NodeKind::Page => 0,
        NodeKind::Category => 1,
    };
    let h = splitmix64(splitmix64(seed ^ kind_bit).wrapping_add(node.id));
    Some(out[(h % out.len() as u64) as usize].to.id)
}

fn canonical(mut cycle: Vec<u64>) -> Vec<u64> {
    let start = (0..cycle.len()).min_by_key(|&i| cycle[i]).unwrap_or(0);
    cycle.rotate_left(start);
    cycle
}

fn walk(graph: &CategoryGraph, seed: u64) -> CycleReport {
    let root = graph.root().id;
    let mut report = CycleReport::default();
    let mut hits: BTreeMap<Vec<u64>, u64> = BTreeMap::new();
    for page in graph.pages() {
        report.walks += 1;
        let Some(mut current) = chosen_parent(graph, page, seed) else {
            report.dead_ends += 1;
            continue;
        };
        let mut path: Vec<u64> = Vec::new();
        let mut seen: HashMap<u64, usize> = HashMap::new();
        loop {
            if current == root {
                report.reached_root += 1;
                break;
            }
            if let Some(&at) = seen.get(&current) {
                report.ended_in_cycle += 1;
                *hits.entry(canonical(path[at..].to_vec())).or_default() += 1;
                break;
            }
            seen.insert(current, path.len());
            path.push(current);
            match chosen_parent(graph, NodeId::category(current), seed) {
                Some(next) => current = next,
                None => {
                    report.dead_ends += 1;
                    break;
                }
            }
        }
    }
    report.cycles = hits.into_iter().map(|(categories, hits)| CycleHit { categories, hits }).collect();
    report.cycles.sort_by(|x, y| x.categories.len().cmp(&y.categories.len()).then(x.categories.cmp(&y.categories)));
    report
}
