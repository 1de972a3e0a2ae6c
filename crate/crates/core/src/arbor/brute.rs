use super::{ArborError, Arborescence, RootedCostDigraph};

pub const BRUTE_FORCE_MAX_NODES: usize = 8;

/// Exhaustive search over every choice of one incoming edge per non-root
/// node. Among equal totals the lexicographically smallest parent vector
/// wins. Test oracle; limited to [`BRUTE_FORCE_MAX_NODES`] non-root nodes.
pub fn brute_force_min_arborescence(graph: &RootedCostDigraph) -> Result<Arborescence, ArborError> {
    let n = graph.len();
    let root = graph.root();
    if n - 1 > BRUTE_FORCE_MAX_NODES {
        return Err(ArborError::TooLarge { got: n - 1, max: BRUTE_FORCE_MAX_NODES });
    }
    graph.check_reachable()?;

    let non_root: Vec<usize> = (0..n).filter(|&v| v != root).collect();
    // Candidates per node, by ascending source.
    let mut candidates: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in graph.edges() {
        candidates[e.to].push((e.from, e.cost));
    }
    for c in &mut candidates {
        c.sort_by_key(|x| x.0);
    }

    let mut pick = vec![0usize; non_root.len()];
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut parent = vec![usize::MAX; n];
    loop {
        let mut total = 0.0;
        for (k, &v) in non_root.iter().enumerate() {
            let (p, c) = candidates[v][pick[k]];
            parent[v] = p;
            total += c;
        }
        if reaches_root(&parent, root) && best.as_ref().is_none_or(|b| total < b.0) {
            best = Some((total, pick.clone()));
        }
        // Odometer increment, last position fastest, so candidates are
        // visited in lexicographic order of the parent vector.
        let mut k = non_root.len();
        loop {
            if k == 0 {
                let (_, pick) = best.expect("reachable graphs have an arborescence");
                let parents =
                    (0..n).map(|v| non_root.iter().position(|&u| u == v).map(|i| candidates[v][pick[i]])).collect();
                return Ok(Arborescence::from_parents(graph.labels().to_vec(), root, parents));
            }
            k -= 1;
            pick[k] += 1;
            if pick[k] < candidates[non_root[k]].len() {
                break;
            }
            pick[k] = 0;
        }
    }
}

fn reaches_root(parent: &[usize], root: usize) -> bool {
    let n = parent.len();
    (0..n).all(|start| {
        let mut at = start;
        for _ in 0..n {
            if at == root {
                return true;
            }
            at = parent[at];
        }
        at == root
    })
}
