use std::cmp::Ordering;

use super::{ArborError, Arborescence, RootedCostDigraph};

#[derive(Debug, Clone, Copy)]
struct WorkEdge {
    from: usize,
    to: usize,
    cost: f64,
    /// Source index in the original graph, used for tie-breaking.
    source: usize,
    /// Index of the edge this one was derived from one level up.
    origin: usize,
}

/// The cheapest incoming edge per node; equal costs go to the smaller
/// original source, then to the earlier edge.
fn cheapest_incoming(n: usize, root: usize, edges: &[WorkEdge]) -> Vec<usize> {
    let mut best = vec![usize::MAX; n];
    for (i, e) in edges.iter().enumerate() {
        if e.to == root {
            continue;
        }
        let b = best[e.to];
        let better = b == usize::MAX || {
            let cur = &edges[b];
            match e.cost.partial_cmp(&cur.cost).expect("finite costs") {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => e.source < cur.source,
            }
        };
        if better {
            best[e.to] = i;
        }
    }
    best
}

/// Cycles of the functional graph `v -> from(best[v])`, each listed once.
fn find_cycles(n: usize, root: usize, edges: &[WorkEdge], best: &[usize]) -> Vec<Vec<usize>> {
    const DONE: usize = usize::MAX;
    let mut stamp = vec![0usize; n];
    stamp[root] = DONE;
    let mut cycles = Vec::new();
    for start in 0..n {
        if stamp[start] != 0 {
            continue;
        }
        let mark = start + 1;
        let mut at = start;
        while stamp[at] == 0 {
            stamp[at] = mark;
            at = edges[best[at]].from;
        }
        if stamp[at] == mark {
            let mut cycle = vec![at];
            let mut v = edges[best[at]].from;
            while v != at {
                cycle.push(v);
                v = edges[best[v]].from;
            }
            cycles.push(cycle);
        }
        let mut v = start;
        while stamp[v] == mark {
            stamp[v] = DONE;
            v = edges[best[v]].from;
        }
    }
    cycles
}

struct Level {
    edges: Vec<WorkEdge>,
    best: Vec<usize>,
    root: usize,
}

/// Minimum-cost spanning arborescence by repeated cycle contraction.
///
/// Ties between equal-cost incoming edges go to the smaller source id, so
/// the result is a deterministic function of the input.
pub fn chu_liu_edmonds(graph: &RootedCostDigraph) -> Result<Arborescence, ArborError> {
    graph.check_reachable()?;
    let n0 = graph.len();
    let mut n = n0;
    let mut root = graph.root();
    let mut edges: Vec<WorkEdge> = graph
        .edges()
        .iter()
        .enumerate()
        .map(|(i, e)| WorkEdge { from: e.from, to: e.to, cost: e.cost, source: e.from, origin: i })
        .collect();
    let mut levels: Vec<Level> = Vec::new();

    let mut chosen = loop {
        let best = cheapest_incoming(n, root, &edges);
        let cycles = find_cycles(n, root, &edges, &best);
        if cycles.is_empty() {
            break best;
        }

        let mut in_cycle = vec![usize::MAX; n];
        for (k, c) in cycles.iter().enumerate() {
            for &v in c {
                in_cycle[v] = k;
            }
        }
        // Contracted ids in order of each component's smallest member.
        let mut comp = vec![usize::MAX; n];
        let mut cycle_comp = vec![usize::MAX; cycles.len()];
        let mut next = 0;
        for v in 0..n {
            if in_cycle[v] == usize::MAX {
                comp[v] = next;
                next += 1;
            } else {
                let k = in_cycle[v];
                if cycle_comp[k] == usize::MAX {
                    cycle_comp[k] = next;
                    next += 1;
                }
                comp[v] = cycle_comp[k];
            }
        }

        let mut contracted = Vec::with_capacity(edges.len());
        for (i, e) in edges.iter().enumerate() {
            let (cu, cv) = (comp[e.from], comp[e.to]);
            if cu == cv {
                continue;
            }
            let cost = if in_cycle[e.to] != usize::MAX { e.cost - edges[best[e.to]].cost } else { e.cost };
            contracted.push(WorkEdge { from: cu, to: cv, cost, source: e.source, origin: i });
        }
        levels.push(Level { edges: std::mem::replace(&mut edges, contracted), best, root });
        root = comp[root];
        n = next;
    };

    // Expand: every contracted node's entering edge replaces the cycle edge
    // into the same member; the rest of each cycle keeps its cheapest edges.
    while let Some(level) = levels.pop() {
        let mut expanded = level.best;
        for (w, &idx) in chosen.iter().enumerate() {
            if w == root || idx == usize::MAX {
                continue;
            }
            let origin = edges[idx].origin;
            expanded[level.edges[origin].to] = origin;
        }
        root = level.root;
        chosen = expanded;
        edges = level.edges;
    }

    let parent = (0..n0)
        .map(|v| {
            if v == graph.root() {
                None
            } else {
                let e = &graph.edges()[edges[chosen[v]].origin];
                Some((e.from, e.cost))
            }
        })
        .collect();
    Ok(Arborescence::from_parents(graph.labels().to_vec(), graph.root(), parent))
}
