#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wikistrata::arbor::RootedCostDigraph;
use wikistrata::catgraph::{CategoryGraph, EdgeKind, GraphEdge};
use wikistrata::corpus::NodeId;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A digraph on `n` nodes rooted at 0 in which every node is reachable:
/// a random spanning tree plus extra random edges. Costs are integers
/// in `0..=9` when `integer_costs`, otherwise uniform in `[0, 1)`.
pub fn random_rooted(rng: &mut ChaCha8Rng, n: usize, extra: f64, integer_costs: bool) -> Vec<(usize, usize, f64)> {
    let cost = |rng: &mut ChaCha8Rng| {
        if integer_costs {
            rng.random_range(0..=9) as f64
        } else {
            rng.random::<f64>()
        }
    };
    let mut order: Vec<usize> = (1..n).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut edges = Vec::new();
    let mut placed = vec![0usize];
    for &v in &order {
        let u = placed[rng.random_range(0..placed.len())];
        let c = cost(rng);
        edges.push((u, v, c));
        placed.push(v);
    }
    for u in 0..n {
        for v in 1..n {
            if u != v && rng.random_bool(extra) {
                let c = cost(rng);
                edges.push((u, v, c));
            }
        }
    }
    edges
}

/// Grows a random arborescence from the root by repeatedly taking a random
/// edge from the reached set to an unreached node.
pub fn random_arborescence_cost(rng: &mut ChaCha8Rng, g: &RootedCostDigraph) -> f64 {
    let mut reached = vec![false; g.len()];
    reached[g.root()] = true;
    let mut total = 0.0;
    loop {
        let frontier: Vec<_> = g.edges().iter().filter(|e| reached[e.from] && !reached[e.to]).collect();
        if frontier.is_empty() {
            return total;
        }
        let e = frontier[rng.random_range(0..frontier.len())];
        reached[e.to] = true;
        total += e.cost;
    }
}

/// Independent leaf-set oracle: for each category, a DFS backwards along
/// inclusion edges, collecting pages with a membership into any category
/// visited.
pub fn leaf_sets_by_dfs(g: &CategoryGraph) -> HashMap<u64, BTreeSet<u64>> {
    let mut children: HashMap<u64, Vec<u64>> = HashMap::new();
    let mut members: HashMap<u64, Vec<u64>> = HashMap::new();
    for e in g.edges() {
        match e.kind {
            EdgeKind::Inclusion => children.entry(e.to.id).or_default().push(e.from.id),
            EdgeKind::Membership => members.entry(e.to.id).or_default().push(e.from.id),
        }
    }
    let mut out = HashMap::new();
    for c in g.categories() {
        let mut seen = BTreeSet::from([c.id]);
        let mut stack = vec![c.id];
        let mut pages = BTreeSet::new();
        while let Some(x) = stack.pop() {
            pages.extend(members.get(&x).into_iter().flatten().copied());
            for &ch in children.get(&x).into_iter().flatten() {
                if seen.insert(ch) {
                    stack.push(ch);
                }
            }
        }
        out.insert(c.id, pages);
    }
    out
}

/// Random page/category graph with `n_cats` categories (0 is the root),
/// `n_pages` pages, random memberships and inclusions (cycles allowed).
pub fn random_category_graph(rng: &mut ChaCha8Rng, n_cats: usize, n_pages: usize, density: f64) -> CategoryGraph {
    let mut nodes: Vec<NodeId> = (0..n_cats as u64).map(NodeId::category).collect();
    nodes.extend((100..100 + n_pages as u64).map(NodeId::page));
    let mut edges = Vec::new();
    for a in 0..n_cats as u64 {
        for b in 0..n_cats as u64 {
            if a != b && rng.random_bool(density) {
                edges.push(GraphEdge { from: NodeId::category(a), to: NodeId::category(b), kind: EdgeKind::Inclusion });
            }
        }
    }
    for p in 100..100 + n_pages as u64 {
        for c in 0..n_cats as u64 {
            if rng.random_bool(density) {
                edges.push(GraphEdge { from: NodeId::page(p), to: NodeId::category(c), kind: EdgeKind::Membership });
            }
        }
    }
    CategoryGraph::from_parts(NodeId::category(0), nodes, edges)
}

/// Writes the corpus and labels of `wiki` into `dir` and returns a
/// pipeline config over them with permissive filters.
pub fn synthetic_pipeline(
    dir: &std::path::Path,
    wiki: &wikistrata::corpus::SyntheticWiki,
    strata: wikistrata::strata::StrataConfig,
) -> wikistrata::pipeline::PipelineConfig {
    use wikistrata::pipeline::PipelineConfig;
    let corpus = dir.join("wiki.jsonl");
    wikistrata::corpus::write_corpus(&wiki.store, std::fs::File::create(&corpus).unwrap()).unwrap();
    let labels = dir.join("labels.tsv");
    let lc = wikistrata::eval::LabeledCorpus::new(wiki.labels.iter().map(|(&id, l)| (id, l.clone()))).unwrap();
    wikistrata::eval::write_labels(std::fs::File::create(&labels).unwrap(), &lc).unwrap();
    let mut cfg = PipelineConfig::default();
    cfg.corpus.path = corpus;
    cfg.filter.min_distinct_terms = 1;
    cfg.filter.min_in_links = 0;
    cfg.filter.min_out_links = 0;
    cfg.vocab.min_df = 2;
    cfg.strata = strata;
    cfg.eval.labels = Some(labels);
    cfg.cache.dir = dir.join("cache");
    cfg.output.dir = dir.join("out");
    cfg
}

pub const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/mini_wiki.jsonl");

pub fn plain_analyzer() -> wikistrata::textproc::Analyzer {
    wikistrata::textproc::Analyzer::new(
        Vec::<String>::new(),
        std::sync::Arc::new(wikistrata::textproc::PluralStemmer),
        true,
    )
}

pub fn fixture_store() -> wikistrata::corpus::CorpusStore {
    wikistrata::corpus::read_corpus(std::path::Path::new(FIXTURE)).unwrap()
}

/// Index over every fixture page with `min_df = 1`.
pub fn fixture_index() -> (wikistrata::corpus::CorpusStore, wikistrata::esa::EsaIndex) {
    use wikistrata::exec::Exec;
    let store = fixture_store();
    let a = plain_analyzer();
    let vocab = wikistrata::textproc::build_vocabulary(&store, &a, 1, Exec::Sequential);
    let index = wikistrata::esa::EsaIndex::build(&store, &a, vocab, Exec::Sequential);
    (store, index)
}

/// Index, graph, leaf sets, category vectors and arborescence of a
/// synthetic corpus, built without the pipeline.
pub struct Built {
    pub store: wikistrata::corpus::CorpusStore,
    pub index: wikistrata::esa::EsaIndex,
    pub graph: wikistrata::catgraph::CategoryGraph,
    pub leaves: wikistrata::catgraph::LeafSetIndex,
    pub catvecs: wikistrata::catgraph::CategoryVectors,
    pub arbor: wikistrata::arbor::Arborescence,
}

pub fn build_all(store: wikistrata::corpus::CorpusStore, min_df: u32) -> Built {
    use wikistrata::catgraph::*;
    use wikistrata::exec::Exec;
    let a = plain_analyzer();
    let vocab = wikistrata::textproc::build_vocabulary(&store, &a, min_df, Exec::Sequential);
    let index = wikistrata::esa::EsaIndex::build(&store, &a, vocab, Exec::Sequential);
    let graph = build_graph(&store);
    let leaves = leaf_sets(&graph);
    let catvecs = build_category_vectors(&index, &leaves, 1000, CategoricalIdf::Prose, Exec::Sequential);
    let pages: Vec<_> = (0..index.n_concepts()).map(|c| index.page_document_vector(c as u32)).collect();
    let weights = weight_edges(&graph, |n: NodeId| {
        if n.is_page() {
            index.concept_of(n.id).map(|c| &pages[c as usize])
        } else {
            catvecs.get(n.id).map(|p| &p.vector)
        }
    })
    .unwrap();
    let digraph = wikistrata::arbor::reverse_and_cost(&graph, &weights, graph.root()).unwrap();
    let arbor = wikistrata::arbor::chu_liu_edmonds(&digraph).unwrap();
    Built { store, index, graph, leaves, catvecs, arbor }
}

/// Category graph whose only 2- and 3-cycles are the planted ones, plus
/// those cycles in canonical form (smallest id first, edge direction
/// kept). Inclusions otherwise only point from larger to smaller ids, and
/// each planted cycle owns a contiguous id block with no other edges
/// inside it, so any other short cycle would need an upward edge.
pub fn planted_cycles(rng: &mut ChaCha8Rng) -> (CategoryGraph, BTreeSet<Vec<u64>>) {
    let n_two = rng.random_range(0..=3usize);
    let n_three = rng.random_range(0..=3usize);
    let n_cats = rng.random_range(12..=40u64);
    let mut block_of = vec![usize::MAX; n_cats as usize];
    let mut planted = BTreeSet::new();
    let mut inclusions: Vec<(u64, u64)> = Vec::new();
    let mut next = 1u64;
    for b in 0..n_two + n_three {
        let len = if b < n_two { 2 } else { 3 };
        next += rng.random_range(0..3);
        if next + len > n_cats {
            break;
        }
        let ids: Vec<u64> = (next..next + len).collect();
        for &i in &ids {
            block_of[i as usize] = b;
        }
        if len == 2 || rng.random_bool(0.5) {
            for k in 0..len as usize {
                inclusions.push((ids[k], ids[(k + 1) % len as usize]));
            }
            planted.insert(ids.clone());
        } else {
            for k in 0..len as usize {
                inclusions.push((ids[(k + 1) % len as usize], ids[k]));
            }
            planted.insert(vec![ids[0], ids[2], ids[1]]);
        }
        next += len;
    }
    for a in 1..n_cats {
        for b in 0..a {
            let same = block_of[a as usize] != usize::MAX && block_of[a as usize] == block_of[b as usize];
            if !same && (b == 0 || rng.random_bool(0.15)) {
                inclusions.push((a, b));
            }
        }
    }
    let mut nodes: Vec<NodeId> = (0..n_cats).map(NodeId::category).collect();
    nodes.extend((1000..1010).map(NodeId::page));
    let mut edges: Vec<GraphEdge> = inclusions
        .into_iter()
        .map(|(a, b)| GraphEdge { from: NodeId::category(a), to: NodeId::category(b), kind: EdgeKind::Inclusion })
        .collect();
    for p in 1000..1010 {
        edges.push(GraphEdge {
            from: NodeId::page(p),
            to: NodeId::category(rng.random_range(0..n_cats)),
            kind: EdgeKind::Membership,
        });
    }
    (CategoryGraph::from_parts(NodeId::category(0), nodes, edges), planted)
}

/// Histogram of `n` draws from the discrete power law `P(k) ~ k^-alpha`.
pub fn power_law_histogram(rng: &mut ChaCha8Rng, alpha: f64, n: usize) -> std::collections::BTreeMap<u64, u64> {
    use rand_distr::{Distribution, Zeta};
    let zeta = Zeta::new(alpha).unwrap();
    let mut hist = std::collections::BTreeMap::new();
    for _ in 0..n {
        let k: f64 = zeta.sample(rng);
        *hist.entry(k as u64).or_default() += 1;
    }
    hist
}
