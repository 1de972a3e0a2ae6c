mod common;

use std::collections::{BTreeMap, BTreeSet};

use wikistrata::catgraph::{
    build_graph, categorical_tfidf, cycle_census, leaf_sets, CategoricalIdf, CensusMode, EdgeKind,
};
use wikistrata::corpus::{filter_pages, CategoryRecord, CorpusStore, FilterConfig};
use wikistrata::exec::Exec;

/// Counts straight from the JSON lines, without the corpus reader.
#[test]
fn fixture_counts_match_raw_lines() {
    let text = std::fs::read_to_string(common::FIXTURE).unwrap();
    let (mut pages, mut cats, mut members) = (0, 0, 0);
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        match v["kind"].as_str().unwrap() {
            "page" => {
                pages += 1;
                members += v["categories"].as_array().unwrap().len();
            }
            "category" => cats += 1,
            _ => {}
        }
    }
    let store = common::fixture_store();
    assert_eq!((pages, cats, members), (8, 5, 13));
    assert_eq!(store.pages().len(), pages);
    assert_eq!(store.categories().len(), cats);
    assert_eq!(store.membership_count(), members);
}

#[test]
fn filter_drops_short_pages() {
    let store = common::fixture_store();
    let a = common::plain_analyzer();
    let cfg = FilterConfig { min_distinct_terms: 3, min_in_links: 1, min_out_links: 1, ..FilterConfig::default() };
    let kept: BTreeSet<u64> = filter_pages(&store, &cfg, &a, Exec::Sequential).pages().iter().map(|p| p.id).collect();

    let mut in_links: BTreeMap<u64, u32> = BTreeMap::new();
    for p in store.pages() {
        for &l in &p.links {
            *in_links.entry(l).or_default() += 1;
        }
    }
    let expect: BTreeSet<u64> = store
        .pages()
        .iter()
        .filter(|p| {
            let distinct: BTreeSet<String> = a.analyze(&p.text).into_iter().collect();
            distinct.len() >= 3 && in_links.get(&p.id).copied().unwrap_or(0) >= 1 && !p.links.is_empty()
        })
        .map(|p| p.id)
        .collect();
    assert_eq!(kept, expect);
    assert_eq!(store.pages().len() - kept.len(), 2);
    assert!(!kept.contains(&16) && !kept.contains(&17));
}

#[test]
fn df_table_by_set_membership() {
    let (store, index) = common::fixture_index();
    let a = common::plain_analyzer();
    let sets: Vec<BTreeSet<String>> = store.pages().iter().map(|p| a.analyze(&p.text).into_iter().collect()).collect();
    let vocab = index.vocabulary();
    for (t, term) in vocab.terms().iter().enumerate() {
        let df = sets.iter().filter(|s| s.contains(term)).count() as u32;
        assert_eq!(vocab.df(t as u32), df, "{term}");
    }
}

/// tfidf replayed from token counts: `(1 + ln f) * ln(N / df)`.
#[test]
fn tfidf_matrix_replay() {
    let (store, index) = common::fixture_index();
    let a = common::plain_analyzer();
    let n = index.n_concepts() as f64;
    let vocab = index.vocabulary();
    for p in store.pages() {
        let c = index.concept_of(p.id).unwrap();
        let mut counts: BTreeMap<String, u32> = BTreeMap::new();
        for tok in a.analyze(&p.text) {
            *counts.entry(tok).or_default() += 1;
        }
        for (term, f) in counts {
            let t = vocab.term_id(&term).unwrap();
            let expect = (1.0 + (f as f64).ln()) * (n / vocab.df(t) as f64).ln();
            assert!((index.page_tfidf(c, t) - expect).abs() < 1e-12, "{term} in {}", p.id);
        }
    }
}

/// Relatedness from dense columns of the row-normalized page-term matrix.
#[test]
fn relatedness_dense_cosine() {
    let (_, index) = common::fixture_index();
    let n_terms = index.vocabulary().len() as u32;
    let n = index.n_concepts();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|c| {
            let row: Vec<f64> = (0..n_terms).map(|t| index.page_tfidf(c as u32, t)).collect();
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            row.iter().map(|v| if norm == 0.0 { 0.0 } else { v / norm }).collect()
        })
        .collect();
    let column = |t: u32| -> Vec<f64> { rows.iter().map(|r| r[t as usize]).collect() };
    for a in 0..n_terms {
        for b in 0..n_terms {
            let (x, y) = (column(a), column(b));
            let dot: f64 = x.iter().zip(&y).map(|(p, q)| p * q).sum();
            let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            let expect = if nx == 0.0 || ny == 0.0 { 0.0 } else { dot / (nx * ny) };
            assert!((index.relatedness(a, b).unwrap() - expect).abs() < 1e-12);
        }
    }
}

/// Adds one extra category per page holding only that page.
fn with_singletons(store: &CorpusStore) -> CorpusStore {
    let mut pages = store.pages().to_vec();
    let mut cats: Vec<CategoryRecord> = store.categories().to_vec();
    for p in &mut pages {
        let id = 1000 + p.id;
        cats.push(CategoryRecord { id, title: format!("Only {}", p.title), parents: vec![store.root()] });
        p.categories.push(id);
    }
    CorpusStore::new(store.root(), pages, cats).unwrap()
}

#[test]
fn singleton_category_equals_page_tfidf() {
    let (store, index) = common::fixture_index();
    let store = with_singletons(&store);
    let leaves = leaf_sets(&build_graph(&store));
    for p in store.pages() {
        let c = index.concept_of(p.id).unwrap();
        for &(t, _) in index.page_terms(c) {
            let cat = categorical_tfidf(t, 1000 + p.id, &index, &leaves, CategoricalIdf::Prose).unwrap();
            assert!((cat - index.page_tfidf(c, t)).abs() <= 1e-12, "page {} term {t}", p.id);
        }
    }
}

/// The literal denominator counts every outside document, so a singleton
/// gets idf `ln(N / N) = 0`.
#[test]
fn literal_singleton_idf_vanishes() {
    let (store, index) = common::fixture_index();
    let store = with_singletons(&store);
    let leaves = leaf_sets(&build_graph(&store));
    let c = index.concept_of(10).unwrap();
    for &(t, _) in index.page_terms(c) {
        assert_eq!(categorical_tfidf(t, 1010, &index, &leaves, CategoricalIdf::Literal).unwrap(), 0.0);
    }
}

/// Leaf sets by hand: 3 and 4 include each other, so both collect the
/// pages of either; 2 adds the composers; 1 and the root see everything.
#[test]
fn fixture_leaf_sets_and_cycle() {
    let g = build_graph(&common::fixture_store());
    let leaves = leaf_sets(&g);
    let set = |c: u64| leaves.leaves(c).unwrap().to_vec();
    assert_eq!(set(3), vec![10, 11, 12, 13, 14, 16]);
    assert_eq!(set(4), set(3));
    assert_eq!(set(2), set(3));
    assert_eq!(set(1), (10..=17).collect::<Vec<_>>());
    assert_eq!(set(0), set(1));

    let inclusions: BTreeSet<(u64, u64)> =
        g.edges().iter().filter(|e| e.kind == EdgeKind::Inclusion).map(|e| (e.from.id, e.to.id)).collect();
    assert_eq!(inclusions, BTreeSet::from([(1, 0), (2, 1), (3, 2), (3, 4), (4, 1), (4, 3)]));

    let report = cycle_census(&g, CensusMode::Exact);
    let cycles: Vec<Vec<u64>> = report.cycles.iter().map(|c| c.categories.clone()).collect();
    assert_eq!(cycles, vec![vec![3, 4]]);
}
