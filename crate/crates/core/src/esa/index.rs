use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{tfidf_weight, EsaError, Space, SparseVector};
use crate::corpus::CorpusStore;
use crate::exec::Exec;
use crate::textproc::{Analyzer, TermId, Vocabulary};

/// Term x concept matrix plus the forward and inverted indexes needed by
/// the categorical and stratified weightings.
///
/// Concept dimensions are page positions in id order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsaIndex {
    vocabulary: Vocabulary,
    page_ids: Vec<u64>,
    /// Per page: (term, raw frequency), sorted by term.
    page_terms: Vec<Vec<(TermId, u32)>>,
    /// Per page: unit tfidf vector in term space, or zero.
    page_vectors: Vec<SparseVector>,
    /// Per term: (concept, raw frequency), sorted by concept.
    postings: Vec<Vec<(u32, u32)>>,
    /// Per term: its row of the matrix, as a concept-space vector.
    word_vectors: Vec<SparseVector>,
    zero_pages: Vec<u64>,
}

impl EsaIndex {
    pub fn build(store: &CorpusStore, analyzer: &Analyzer, vocabulary: Vocabulary, exec: Exec) -> EsaIndex {
        let n_docs = store.pages().len() as f64;
        let page_terms: Vec<Vec<(TermId, u32)>> =
            exec.map(store.pages(), |p| count_terms(&vocabulary, &analyzer.analyze(&p.text)));
        let page_vectors: Vec<SparseVector> = exec.map(&page_terms, |terms| {
            let raw =
                terms.iter().map(|&(t, f)| (t, tfidf_weight(f as f64, vocabulary.df(t) as f64, n_docs))).collect();
            SparseVector::from_sorted(Space::Term, raw).normalized()
        });

        let mut postings = vec![Vec::new(); vocabulary.len()];
        for (dim, terms) in page_terms.iter().enumerate() {
            for &(t, f) in terms {
                postings[t as usize].push((dim as u32, f));
            }
        }
        let mut columns: Vec<Vec<(u32, f64)>> = vec![Vec::new(); vocabulary.len()];
        for (dim, v) in page_vectors.iter().enumerate() {
            for &(t, w) in v.entries() {
                columns[t as usize].push((dim as u32, w));
            }
        }
        let word_vectors = columns.into_iter().map(|c| SparseVector::from_sorted(Space::Concept, c)).collect();
        let page_ids: Vec<u64> = store.pages().iter().map(|p| p.id).collect();
        let zero_pages = page_ids.iter().zip(&page_vectors).filter(|(_, v)| v.is_zero()).map(|(&id, _)| id).collect();

        EsaIndex { vocabulary, page_ids, page_terms, page_vectors, postings, word_vectors, zero_pages }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    /// #W, the number of concepts.
    pub fn n_concepts(&self) -> usize {
        self.page_ids.len()
    }

    pub fn page_ids(&self) -> &[u64] {
        &self.page_ids
    }

    pub fn concept_of(&self, page_id: u64) -> Option<u32> {
        self.page_ids.binary_search(&page_id).ok().map(|i| i as u32)
    }

    pub fn page_id(&self, concept: u32) -> u64 {
        self.page_ids[concept as usize]
    }

    pub fn page_terms(&self, concept: u32) -> &[(TermId, u32)] {
        &self.page_terms[concept as usize]
    }

    pub fn page_vector(&self, concept: u32) -> &SparseVector {
        &self.page_vectors[concept as usize]
    }

    pub fn postings(&self, term: TermId) -> &[(u32, u32)] {
        &self.postings[term as usize]
    }

    /// Pages whose tfidf vector came out zero.
    pub fn zero_pages(&self) -> &[u64] {
        &self.zero_pages
    }

    pub fn term_id(&self, term: &str) -> Result<TermId, EsaError> {
        self.vocabulary.term_id(term).ok_or_else(|| EsaError::UnknownWord(term.to_string()))
    }

    /// The word's concept-space vector (not renormalized).
    pub fn word_vector(&self, term: TermId) -> Result<&SparseVector, EsaError> {
        self.word_vectors.get(term as usize).ok_or(EsaError::UnknownTerm(term))
    }

    pub fn relatedness(&self, a: TermId, b: TermId) -> Result<f64, EsaError> {
        Ok(self.word_vector(a)?.cosine(self.word_vector(b)?))
    }

    /// Classical tfidf of `term` inside the page, 0 if absent.
    pub fn page_tfidf(&self, concept: u32, term: TermId) -> f64 {
        let terms = self.page_terms(concept);
        match terms.binary_search_by_key(&term, |e| e.0) {
            Ok(i) => self.tfidf_of(terms[i].1, term),
            Err(_) => 0.0,
        }
    }

    /// tfidf of a term occurring `f` times in some document, with df taken
    /// from the index.
    pub fn tfidf_of(&self, f: u32, term: TermId) -> f64 {
        tfidf_weight(f as f64, self.vocabulary.df(term) as f64, self.n_concepts() as f64)
    }

    /// Known-term frequencies of an analyzed document, sorted by term.
    pub fn count_terms(&self, terms: &[String]) -> Vec<(TermId, u32)> {
        count_terms(&self.vocabulary, terms)
    }

    /// Concept vector of an analyzed document with tfidf weights.
    pub fn document_vector(&self, terms: &[String]) -> SparseVector {
        self.document_vector_with(terms, |t, f| self.tfidf_of(f, t))
    }

    /// Concept vector of an analyzed document under a custom term weight
    /// `weight(term, frequency)`. Out-of-vocabulary terms are skipped.
    pub fn document_vector_with<F>(&self, terms: &[String], weight: F) -> SparseVector
    where
        F: Fn(TermId, u32) -> f64,
    {
        let weighted: Vec<(TermId, f64)> =
            self.count_terms(terms).into_iter().map(|(t, f)| (t, weight(t, f))).collect();
        combine_word_vectors(self, &weighted)
    }

    /// Baseline concept vector of a corpus page.
    pub fn page_document_vector(&self, concept: u32) -> SparseVector {
        let weighted: Vec<(TermId, f64)> =
            self.page_terms(concept).iter().map(|&(t, f)| (t, self.tfidf_of(f, t))).collect();
        combine_word_vectors(self, &weighted)
    }
}

fn count_terms(vocabulary: &Vocabulary, terms: &[String]) -> Vec<(TermId, u32)> {
    let mut counts: BTreeMap<TermId, u32> = BTreeMap::new();
    for t in terms {
        if let Some(id) = vocabulary.term_id(t) {
            *counts.entry(id).or_default() += 1;
        }
    }
    counts.into_iter().collect()
}

/// `sum_w t(w) * vec(w) / sqrt(sum_w t(w)^2)`, then rescaled to unit length
/// (word vectors are not orthonormal, so the first division alone does not
/// give a unit vector). Zero when every weight or every word vector is zero.
///
/// Contributions are summed per concept in the order of `weighted`.
pub fn combine_word_vectors(index: &EsaIndex, weighted: &[(TermId, f64)]) -> SparseVector {
    let coef_norm = weighted.iter().map(|&(_, t)| t * t).sum::<f64>().sqrt();
    if coef_norm == 0.0 {
        return SparseVector::zero(Space::Concept);
    }
    let mut parts: Vec<(u32, f64)> = Vec::new();
    for &(term, t) in weighted {
        if t == 0.0 {
            continue;
        }
        for &(dim, w) in index.word_vectors[term as usize].entries() {
            parts.push((dim, t * w));
        }
    }
    // Stable sort keeps the term order within each concept.
    parts.sort_by_key(|p| p.0);
    let mut summed: Vec<(u32, f64)> = Vec::new();
    for (dim, x) in parts {
        match summed.last_mut() {
            Some(last) if last.0 == dim => last.1 += x,
            _ => summed.push((dim, x)),
        }
    }
    for e in &mut summed {
        e.1 /= coef_norm;
    }
    SparseVector::from_sorted(Space::Concept, summed).normalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CategoryRecord, PageRecord, SyntheticConfig};
    use crate::textproc::{build_vocabulary, IdentityStemmer};
    use std::sync::Arc;

    fn store_of(texts: &[&str]) -> CorpusStore {
        let pages = texts
            .iter()
            .enumerate()
            .map(|(i, t)| PageRecord {
                id: 10 + i as u64,
                title: format!("P{i}"),
                text: t.to_string(),
                categories: vec![0],
                links: vec![],
                link_basis: None,
            })
            .collect();
        CorpusStore::new(0, pages, vec![CategoryRecord { id: 0, title: "R".into(), parents: vec![] }]).unwrap()
    }

    fn index_of(texts: &[&str]) -> EsaIndex {
        let store = store_of(texts);
        let a = Analyzer::default().with_stemmer(Arc::new(IdentityStemmer));
        let v = build_vocabulary(&store, &a, 1, Exec::Sequential);
        EsaIndex::build(&store, &a, v, Exec::Sequential)
    }

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn single_page_is_zero_and_reported() {
        let idx = index_of(&["alpha beta beta"]);
        assert!(idx.page_vector(0).is_zero());
        assert_eq!(idx.zero_pages(), &[10]);
    }

    #[test]
    fn identical_pages_identical_vectors() {
        let idx = index_of(&["a b b c", "a b b c", "d e"]);
        assert_eq!(idx.page_vector(0), idx.page_vector(1));
        assert!((idx.page_vector(0).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn word_vector_shapes() {
        let idx = index_of(&["a x", "b x", "c x"]);
        let a = idx.term_id("a").unwrap();
        assert_eq!(idx.word_vector(a).unwrap().nnz(), 1);
        let x = idx.term_id("x").unwrap();
        assert!(idx.word_vector(x).unwrap().is_zero());
        assert_eq!(idx.word_vector(99), Err(EsaError::UnknownTerm(99)));
    }

    #[test]
    fn relatedness_basics() {
        let idx = index_of(&["a b", "c d", "a e", "f g"]);
        let t = |s| idx.term_id(s).unwrap();
        assert_eq!(idx.relatedness(t("a"), t("a")).unwrap(), 1.0);
        assert_eq!(idx.relatedness(t("b"), t("c")).unwrap(), 0.0);
    }

    #[test]
    fn document_vector_cases() {
        let idx = index_of(&["a b", "c d", "e f"]);
        assert!(idx.document_vector(&words("zzz yyy")).is_zero());
        // Every known term of the document lives only in page 1.
        let v = idx.document_vector(&words("c d d unknown"));
        assert_eq!(v.entries(), &[(1, 1.0)]);
    }

    #[test]
    fn page_document_vector_matches_text_route() {
        let wiki = SyntheticConfig::new(2, 3, 6, 12, 2).generate();
        let a = Analyzer::default();
        let v = build_vocabulary(&wiki.store, &a, 2, Exec::Sequential);
        let idx = EsaIndex::build(&wiki.store, &a, v, Exec::Parallel);
        for (dim, p) in wiki.store.pages().iter().enumerate() {
            let via_text = idx.document_vector(&a.analyze(&p.text));
            assert_eq!(idx.page_document_vector(dim as u32), via_text);
            assert!(via_text.is_zero() || (via_text.norm() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn rebuild_is_bit_identical_across_modes() {
        let wiki = SyntheticConfig::new(8, 4, 10, 20, 2).generate();
        let a = Analyzer::default();
        let v = build_vocabulary(&wiki.store, &a, 3, Exec::Sequential);
        let seq = EsaIndex::build(&wiki.store, &a, v.clone(), Exec::Sequential);
        let par = EsaIndex::build(&wiki.store, &a, v, Exec::Parallel);
        assert_eq!(serde_json::to_string(&seq).unwrap(), serde_json::to_string(&par).unwrap());
    }
}
