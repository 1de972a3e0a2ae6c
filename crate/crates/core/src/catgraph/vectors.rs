use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{CatGraphError, CategoryGraph, EdgeKind, LeafSetIndex};
use crate::corpus::NodeId;
use crate::esa::{combine_word_vectors, tfidf_weight, EsaIndex, Space, SparseVector};
use crate::exec::Exec;
use crate::textproc::TermId;

/// Which documents the categorical idf counts outside the leaf set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CategoricalIdf {
    /// `1 + #{d outside F(c) : w in d}`. A single-page category then gets
    /// exactly the page's own tfidf.
    #[default]
    Prose,
    /// `1 + #W - |F(c)|`: every document outside the category, whether or
    /// not it contains the term.
    Literal,
}

fn idf_denominator(variant: CategoricalIdf, df: u32, n_in: u32, leaf_count: usize, n_docs: usize) -> f64 {
    match variant {
        CategoricalIdf::Prose => (1 + df - n_in) as f64,
        CategoricalIdf::Literal => (1 + n_docs - leaf_count) as f64,
    }
}

fn leaf_concepts(index: &EsaIndex, leaves: &[u64]) -> Vec<u32> {
    leaves.iter().filter_map(|&p| index.concept_of(p)).collect()
}

/// Categorical tfidf of `term` in `category`: the leaf pages are pooled
/// into one document.
pub fn categorical_tfidf(
    term: TermId,
    category: u64,
    index: &EsaIndex,
    leaves: &LeafSetIndex,
    variant: CategoricalIdf,
) -> Result<f64, CatGraphError> {
    let f_set = leaf_concepts(index, leaves.leaves(category).ok_or(CatGraphError::UnknownCategory(category))?);
    let (mut sum_f, mut n_in) = (0u64, 0u32);
    let mut it = f_set.iter().peekable();
    for &(concept, f) in index.postings(term) {
        while it.next_if(|&&c| c < concept).is_some() {}
        if it.peek() == Some(&&concept) {
            sum_f += f as u64;
            n_in += 1;
        }
    }
    if sum_f == 0 {
        return Err(CatGraphError::TermAbsent { term, category });
    }
    let df = index.vocabulary().df(term);
    let denom = idf_denominator(variant, df, n_in, f_set.len(), index.n_concepts());
    Ok(tfidf_weight(sum_f as f64, denom, index.n_concepts() as f64))
}

/// A category vector and the truncated term support it was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryProfile {
    pub vector: SparseVector,
    /// `(term, categorical tfidf)` for the retained terms, sorted by term.
    pub support: Vec<(TermId, f64)>,
}

impl CategoryProfile {
    fn empty() -> Self {
        CategoryProfile { vector: SparseVector::zero(Space::Concept), support: Vec::new() }
    }

    /// Categorical tfidf of a retained term, 0 for terms cut by truncation.
    pub fn weight(&self, term: TermId) -> f64 {
        match self.support.binary_search_by_key(&term, |e| e.0) {
            Ok(i) => self.support[i].1,
            Err(_) => 0.0,
        }
    }
}

/// Concept-space vector of a category from its `max_nnz` most frequent
/// leaf terms (aggregate raw frequency, ties to the smaller term id).
pub fn category_vector(
    category: u64,
    index: &EsaIndex,
    leaves: &LeafSetIndex,
    max_nnz: usize,
    variant: CategoricalIdf,
) -> Result<CategoryProfile, CatGraphError> {
    let f_set = leaf_concepts(index, leaves.leaves(category).ok_or(CatGraphError::UnknownCategory(category))?);
    Ok(profile_of(&f_set, index, max_nnz, variant))
}

fn profile_of(f_set: &[u32], index: &EsaIndex, max_nnz: usize, variant: CategoricalIdf) -> CategoryProfile {
    if f_set.is_empty() {
        return CategoryProfile::empty();
    }
    let mut agg: HashMap<TermId, (u64, u32)> = HashMap::new();
    for &concept in f_set {
        for &(t, f) in index.page_terms(concept) {
            let e = agg.entry(t).or_default();
            e.0 += f as u64;
            e.1 += 1;
        }
    }
    let mut ranked: Vec<(TermId, u64, u32)> = agg.into_iter().map(|(t, (s, n))| (t, s, n)).collect();
    ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(max_nnz);
    ranked.sort_unstable_by_key(|e| e.0);

    let n_docs = index.n_concepts();
    let support: Vec<(TermId, f64)> = ranked
        .into_iter()
        .map(|(t, sum_f, n_in)| {
            let denom = idf_denominator(variant, index.vocabulary().df(t), n_in, f_set.len(), n_docs);
            (t, tfidf_weight(sum_f as f64, denom, n_docs as f64))
        })
        .collect();
    let vector = combine_word_vectors(index, &support);
    CategoryProfile { vector, support }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryVectors {
    category_ids: Vec<u64>,
    profiles: Vec<CategoryProfile>,
    max_nnz: usize,
    variant: CategoricalIdf,
}

impl CategoryVectors {
    pub fn get(&self, category: u64) -> Option<&CategoryProfile> {
        let i = self.category_ids.binary_search(&category).ok()?;
        Some(&self.profiles[i])
    }

    pub fn category_ids(&self) -> &[u64] {
        &self.category_ids
    }

    pub fn profiles(&self) -> &[CategoryProfile] {
        &self.profiles
    }

    pub fn max_nnz(&self) -> usize {
        self.max_nnz
    }

    pub fn variant(&self) -> CategoricalIdf {
        self.variant
    }
}

/// One profile per category of `leaves`, computed independently.
pub fn build_category_vectors(
    index: &EsaIndex,
    leaves: &LeafSetIndex,
    max_nnz: usize,
    variant: CategoricalIdf,
    exec: Exec,
) -> CategoryVectors {
    let category_ids = leaves.category_ids().to_vec();
    let profiles = exec.map(&category_ids, |&c| {
        let f_set = leaf_concepts(index, leaves.leaves(c).unwrap_or(&[]));
        profile_of(&f_set, index, max_nnz, variant)
    });
    CategoryVectors { category_ids, profiles, max_nnz, variant }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub kind: EdgeKind,
    /// Relatedness `<from, to>`, in `[0, 1]`.
    pub p: f64,
    pub cost: f64,
}

/// Relatedness of every graph edge as the dot product of its endpoint
/// vectors. Unit vectors can overshoot 1 by rounding, so `p` is clamped.
pub fn weight_edges<'a, F>(graph: &CategoryGraph, vector_of: F) -> Result<Vec<WeightedEdge>, CatGraphError>
where
    F: Fn(NodeId) -> Option<&'a SparseVector>,
{
    graph
        .edges()
        .iter()
        .map(|e| {
            let a = vector_of(e.from).ok_or(CatGraphError::MissingVector(e.from))?;
            let b = vector_of(e.to).ok_or(CatGraphError::MissingVector(e.to))?;
            let p = a.dot(b).clamp(0.0, 1.0);
            Ok(WeightedEdge { from: e.from, to: e.to, kind: e.kind, p, cost: 1.0 - p })
        })
        .collect()
}

const EDGE_HEADER: &str = "from\tto\tkind\tp\tcost";

/// TSV with a header row; `p` and `cost` carry 17 significant digits.
pub fn write_weighted_edges<W: Write>(mut out: W, edges: &[WeightedEdge]) -> io::Result<()> {
    writeln!(out, "{EDGE_HEADER}")?;
    for e in edges {
        writeln!(out, "{}\t{}\t{}\t{:.16e}\t{:.16e}", e.from, e.to, e.kind, e.p, e.cost)?;
    }
    Ok(())
}

pub fn read_weighted_edges<R: BufRead>(input: R) -> Result<Vec<WeightedEdge>, CatGraphError> {
    let mut edges = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let bad = |message: String| CatGraphError::BadEdgeLine { line: line_no, message };
        let line = line.map_err(|e| bad(e.to_string()))?;
        if line.is_empty() || (i == 0 && line == EDGE_HEADER) {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 {
            return Err(bad(format!("expected 5 columns, found {}", cols.len())));
        }
        edges.push(WeightedEdge {
            from: cols[0].parse().map_err(|e: String| bad(e))?,
            to: cols[1].parse().map_err(|e: String| bad(e))?,
            kind: cols[2].parse().map_err(bad)?,
            p: cols[3].parse::<f64>().map_err(|e| bad(e.to_string()))?,
            cost: cols[4].parse::<f64>().map_err(|e| bad(e.to_string()))?,
        });
    }
    Ok(edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catgraph::{build_graph, leaf_sets};
    use crate::corpus::{CategoryRecord, CorpusStore, PageRecord, SyntheticConfig};
    use crate::esa::tfidf;
    use crate::textproc::{build_vocabulary, Analyzer};
    use proptest::prelude::*;

    fn page(id: u64, text: &str, cats: &[u64]) -> PageRecord {
        PageRecord {
            id,
            title: format!("page {id}"),
            text: text.into(),
            categories: cats.to_vec(),
            links: vec![],
            link_basis: None,
        }
    }

    fn cat(id: u64, parents: &[u64]) -> CategoryRecord {
        CategoryRecord { id, title: format!("cat {id}"), parents: parents.to_vec() }
    }

    fn setup(store: &CorpusStore) -> (EsaIndex, LeafSetIndex, CategoryGraph) {
        let a = Analyzer::default();
        let v = build_vocabulary(store, &a, 1, Exec::Sequential);
        let idx = EsaIndex::build(store, &a, v, Exec::Sequential);
        let g = build_graph(store);
        (idx, leaf_sets(&g), g)
    }

    fn small() -> CorpusStore {
        CorpusStore::new(
            0,
            vec![
                page(1, "apple apple banana", &[1]),
                page(2, "apple cherry", &[2]),
                page(3, "banana durian", &[2]),
                page(4, "cherry cherry cherry", &[0]),
            ],
            vec![cat(0, &[]), cat(1, &[0]), cat(2, &[0]), cat(3, &[0])],
        )
        .unwrap()
    }

    #[test]
    fn singleton_category_matches_page_tfidf() {
        let store = small();
        let (idx, ls, _) = setup(&store);
        let apple = idx.term_id("apple").unwrap();
        let ct = categorical_tfidf(apple, 1, &idx, &ls, CategoricalIdf::Prose).unwrap();
        assert_eq!(ct, idx.page_tfidf(idx.concept_of(1).unwrap(), apple));
        assert_eq!(ct, tfidf(2.0, 2.0, 4.0).unwrap());
    }

    #[test]
    fn pooled_frequencies_and_outside_count() {
        let store = small();
        let (idx, ls, _) = setup(&store);
        let cherry = idx.term_id("cherry").unwrap();
        // F(2) = {2, 3}: cherry appears once inside, page 4 holds it outside.
        let ct = categorical_tfidf(cherry, 2, &idx, &ls, CategoricalIdf::Prose).unwrap();
        assert!((ct - (4.0f64 / 2.0).ln()).abs() < 1e-15);
        let lit = categorical_tfidf(cherry, 2, &idx, &ls, CategoricalIdf::Literal).unwrap();
        assert!((lit - (4.0f64 / 3.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn maximal_idf_when_confined() {
        let store = small();
        let (idx, ls, _) = setup(&store);
        let durian = idx.term_id("durian").unwrap();
        let ct = categorical_tfidf(durian, 2, &idx, &ls, CategoricalIdf::Prose).unwrap();
        assert!((ct - 4.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn absent_term_and_unknown_category() {
        let store = small();
        let (idx, ls, _) = setup(&store);
        let durian = idx.term_id("durian").unwrap();
        assert_eq!(
            categorical_tfidf(durian, 1, &idx, &ls, CategoricalIdf::Prose),
            Err(CatGraphError::TermAbsent { term: durian, category: 1 })
        );
        assert_eq!(
            categorical_tfidf(durian, 42, &idx, &ls, CategoricalIdf::Prose),
            Err(CatGraphError::UnknownCategory(42))
        );
    }

    #[test]
    fn singleton_vector_equals_page_document_vector() {
        let store = small();
        let (idx, ls, _) = setup(&store);
        let prof = category_vector(1, &idx, &ls, 1000, CategoricalIdf::Prose).unwrap();
        assert_eq!(prof.vector, idx.page_document_vector(idx.concept_of(1).unwrap()));
    }

    #[test]
    fn truncation_to_one_term() {
        let store = small();
        let (idx, ls, _) = setup(&store);
        let prof = category_vector(0, &idx, &ls, 1, CategoricalIdf::Prose).unwrap();
        // Aggregate counts over all pages: apple 3, banana 2, cherry 4, durian 1.
        let cherry = idx.term_id("cherry").unwrap();
        assert_eq!(prof.support.len(), 1);
        assert_eq!(prof.support[0].0, cherry);
        assert_eq!(prof.vector, idx.word_vector(cherry).unwrap().normalized());
        assert_eq!(prof.weight(idx.term_id("apple").unwrap()), 0.0);
    }

    #[test]
    fn frequency_ties_prefer_smaller_term() {
        let store =
            CorpusStore::new(0, vec![page(1, "zeta alpha", &[0]), page(2, "omega", &[])], vec![cat(0, &[])]).unwrap();
        let (idx, ls, _) = setup(&store);
        let prof = category_vector(0, &idx, &ls, 1, CategoricalIdf::Prose).unwrap();
        assert_eq!(prof.support[0].0, idx.term_id("alpha").unwrap());
    }

    #[test]
    fn empty_category_is_zero() {
        let store = small();
        let (idx, ls, _) = setup(&store);
        let prof = category_vector(3, &idx, &ls, 1000, CategoricalIdf::Prose).unwrap();
        assert!(prof.vector.is_zero());
        assert!(prof.support.is_empty());
    }

    #[test]
    fn edges_weighted_by_dot_product() {
        let store = small();
        let (idx, ls, g) = setup(&store);
        let cv = build_category_vectors(&idx, &ls, 1000, CategoricalIdf::Prose, Exec::Sequential);
        let pages: Vec<SparseVector> = (0..idx.n_concepts() as u32).map(|c| idx.page_document_vector(c)).collect();
        let lookup = |n: NodeId| {
            if n.is_page() {
                idx.concept_of(n.id).map(|c| &pages[c as usize])
            } else {
                cv.get(n.id).map(|p| &p.vector)
            }
        };
        let edges = weight_edges(&g, lookup).unwrap();
        assert_eq!(edges.len(), g.edges().len());
        for e in &edges {
            let expect = lookup(e.from).unwrap().dot(lookup(e.to).unwrap());
            assert!((e.p - expect).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&e.p));
            assert_eq!(e.cost + e.p, 1.0);
        }
        // Page 1 is the only leaf of category 1.
        let e = edges.iter().find(|e| e.from == NodeId::page(1)).unwrap();
        assert!((e.p - 1.0).abs() < 1e-12);

        let mut buf = Vec::new();
        write_weighted_edges(&mut buf, &edges).unwrap();
        assert_eq!(read_weighted_edges(&buf[..]).unwrap(), edges);
    }

    #[test]
    fn missing_vector_is_reported() {
        let store = small();
        let (_, _, g) = setup(&store);
        let err = weight_edges(&g, |_| None).unwrap_err();
        assert!(matches!(err, CatGraphError::MissingVector(_)));
    }

    #[test]
    fn modes_agree() {
        let wiki = SyntheticConfig::new(2, 3, 10, 12, 2).generate();
        let (idx, ls, _) = setup(&wiki.store);
        let a = build_category_vectors(&idx, &ls, 25, CategoricalIdf::Prose, Exec::Sequential);
        let b = build_category_vectors(&idx, &ls, 25, CategoricalIdf::Prose, Exec::Parallel);
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn cost_plus_p_is_one(p in 0.0f64..=1.0) {
            prop_assert_eq!((1.0 - p) + p, 1.0);
        }

        #[test]
        fn outside_occurrence_lowers_weight(extra in 1usize..4) {
            // Same corpus size; the extra pages either contain the term or not.
            let pages = vec![page(1, "kiwi kiwi lime", &[1]), page(2, "lime", &[]), page(3, "mango", &[])];
            let cats = vec![cat(0, &[]), cat(1, &[0])];
            let weight_with = |filler: &str| {
                let mut ps = pages.clone();
                for k in 0..extra {
                    ps.push(page(10 + k as u64, filler, &[]));
                }
                let store = CorpusStore::new(0, ps, cats.clone()).unwrap();
                let (idx, ls, _) = setup(&store);
                categorical_tfidf(idx.term_id("kiwi").unwrap(), 1, &idx, &ls, CategoricalIdf::Prose).unwrap()
            };
            prop_assert!(weight_with("kiwi") < weight_with("mango"));
        }
    }
}
