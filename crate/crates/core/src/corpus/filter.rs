use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{CategoryRecord, CorpusStore, LinkBasis, PageRecord};
use crate::exec::Exec;
use crate::textproc::Analyzer;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub min_distinct_terms: usize,
    pub min_in_links: u32,
    pub min_out_links: u32,
    /// Categories whose title starts with one of these prefixes are dropped
    /// together with every membership and inclusion that points at them.
    /// The root is never dropped.
    pub excluded_category_prefixes: Vec<String>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_distinct_terms: 125,
            min_in_links: 15,
            min_out_links: 15,
            excluded_category_prefixes: Vec::new(),
        }
    }
}

impl FilterConfig {
    /// Thresholds that keep every page.
    pub fn permissive() -> Self {
        FilterConfig {
            min_distinct_terms: 0,
            min_in_links: 0,
            min_out_links: 0,
            excluded_category_prefixes: Vec::new(),
        }
    }
}

/// In/out link degree of every page, in page order. A page's recorded
/// [`LinkBasis`] takes precedence over its current links.
pub fn link_degrees(store: &CorpusStore) -> Vec<LinkBasis> {
    let mut in_counts: HashMap<u64, u32> = HashMap::new();
    for p in store.pages() {
        for &target in &p.links {
            *in_counts.entry(target).or_default() += 1;
        }
    }
    store
        .pages()
        .iter()
        .map(|p| {
            p.link_basis.unwrap_or(LinkBasis {
                in_links: in_counts.get(&p.id).copied().unwrap_or(0),
                out_links: p.links.len() as u32,
            })
        })
        .collect()
}

/// Keeps the pages that pass all three thresholds, judged in a single pass
/// against the pre-filter link graph. Links to removed pages are dropped
/// from survivors, and survivors remember their original degrees so that
/// filtering again with the same config is a no-op.
pub fn filter_pages(store: &CorpusStore, cfg: &FilterConfig, analyzer: &Analyzer, exec: Exec) -> CorpusStore {
    let degrees = link_degrees(store);
    let distinct: Vec<usize> =
        exec.map(store.pages(), |p| analyzer.analyze(&p.text).into_iter().collect::<HashSet<_>>().len());

    let excluded: HashSet<u64> = store
        .categories()
        .iter()
        .filter(|c| {
            c.id != store.root()
                && cfg.excluded_category_prefixes.iter().any(|prefix| c.title.starts_with(prefix.as_str()))
        })
        .map(|c| c.id)
        .collect();

    let keep: BTreeSet<u64> = store
        .pages()
        .iter()
        .zip(&degrees)
        .zip(&distinct)
        .filter(|((_, deg), &n)| {
            n >= cfg.min_distinct_terms && deg.in_links >= cfg.min_in_links && deg.out_links >= cfg.min_out_links
        })
        .map(|((p, _), _)| p.id)
        .collect();

    let pages: Vec<PageRecord> = store
        .pages()
        .iter()
        .zip(&degrees)
        .filter(|(p, _)| keep.contains(&p.id))
        .map(|(p, deg)| PageRecord {
            id: p.id,
            title: p.title.clone(),
            text: p.text.clone(),
            categories: p.categories.iter().copied().filter(|c| !excluded.contains(c)).collect(),
            links: p.links.iter().copied().filter(|l| keep.contains(l)).collect(),
            link_basis: Some(*deg),
        })
        .collect();

    let categories: Vec<CategoryRecord> = store
        .categories()
        .iter()
        .filter(|c| !excluded.contains(&c.id))
        .map(|c| CategoryRecord {
            id: c.id,
            title: c.title.clone(),
            parents: c.parents.iter().copied().filter(|p| !excluded.contains(p)).collect(),
        })
        .collect();

    CorpusStore::new(store.root(), pages, categories).expect("filtering a valid store keeps every reference resolvable")
}
