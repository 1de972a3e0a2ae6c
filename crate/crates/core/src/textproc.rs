//! Tokenization, stopword removal, stemming and the document-frequency
//! vocabulary.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::io;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusStore;
use crate::exec::Exec;

pub type TermId = u32;

/// A pure, deterministic word -> stem map. Implementations must be
/// idempotent: `stem(stem(w)) == stem(w)`.
pub trait Stemmer: Send + Sync + fmt::Debug {
    fn stem(&self, word: &str) -> String;

    /// Stable identifier, used when fingerprinting analyzer settings.
    fn name(&self) -> &str;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityStemmer;

impl Stemmer for IdentityStemmer {
    fn stem(&self, word: &str) -> String {
        word.to_string()
    }

    fn name(&self) -> &str {
        "identity"
    }
}

/// Plural stripping with the rule list
/// `sses -> ss`, `ies -> i`, `ss -> ss`, `s -> ""`, first match wins.
/// Words of three characters or fewer are left alone.
#[derive(Debug, Clone, Copy, Default)]
pub struct PluralStemmer;

impl Stemmer for PluralStemmer {
    fn stem(&self, word: &str) -> String {
        if word.chars().count() <= 3 {
            return word.to_string();
        }
        if let Some(base) = word.strip_suffix("sses") {
            format!("{base}ss")
        } else if let Some(base) = word.strip_suffix("ies") {
            format!("{base}i")
        } else if word.ends_with("ss") {
            word.to_string()
        } else if let Some(base) = word.strip_suffix('s') {
            base.to_string()
        } else {
            word.to_string()
        }
    }

    fn name(&self) -> &str {
        "plural"
    }
}

#[derive(Debug, Clone)]
pub struct Analyzer {
    stopwords: HashSet<String>,
    stemmer: Arc<dyn Stemmer>,
    lowercase: bool,
}

impl Default for Analyzer {
    fn default() -> Self {
        Analyzer { stopwords: HashSet::new(), stemmer: Arc::new(PluralStemmer), lowercase: true }
    }
}

impl Analyzer {
    pub fn new(stopwords: impl IntoIterator<Item = String>, stemmer: Arc<dyn Stemmer>, lowercase: bool) -> Self {
        Analyzer { stopwords: stopwords.into_iter().map(|w| w.to_lowercase()).collect(), stemmer, lowercase }
    }

    pub fn with_stopwords(mut self, words: impl IntoIterator<Item = String>) -> Self {
        self.stopwords = words.into_iter().map(|w| w.to_lowercase()).collect();
        self
    }

    pub fn with_stemmer(mut self, stemmer: Arc<dyn Stemmer>) -> Self {
        self.stemmer = stemmer;
        self
    }

    pub fn with_lowercase(mut self, lowercase: bool) -> Self {
        self.lowercase = lowercase;
        self
    }

    /// Tokens are maximal runs of Unicode alphanumerics. Each token is
    /// lowercased (if enabled), dropped if it is a stopword, then stemmed.
    /// Stopwords are matched case-insensitively. Order and repetitions are
    /// preserved.
    pub fn analyze(&self, text: &str) -> Vec<String> {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .filter_map(|raw| {
                let folded = raw.to_lowercase();
                if self.stopwords.contains(&folded) {
                    return None;
                }
                let token = if self.lowercase { folded } else { raw.to_string() };
                let stem = self.stemmer.stem(&token);
                // A stem that collapses onto a stopword ("thes" -> "the") is
                // dropped too, so the output is a fixpoint of the pipeline.
                if !self.stopwords.is_empty() && self.stopwords.contains(&stem.to_lowercase()) {
                    return None;
                }
                Some(stem)
            })
            .collect()
    }

    /// Deterministic description of the settings, for cache keys.
    pub fn fingerprint(&self) -> String {
        let stop: BTreeSet<&String> = self.stopwords.iter().collect();
        format!(
            "stemmer={};lowercase={};stopwords={}",
            self.stemmer.name(),
            self.lowercase,
            stop.into_iter().cloned().collect::<Vec<_>>().join("\u{1f}")
        )
    }
}

/// Reads a stopword list: one term per line, blank lines ignored.
pub fn load_stopwords(path: &Path) -> io::Result<Vec<String>> {
    Ok(fs::read_to_string(path)?.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect())
}

/// Sorted term list with document frequencies. Term ids are positions in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    terms: Vec<String>,
    df: Vec<u32>,
    min_df: u32,
    n_docs: usize,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term_id(&self, term: &str) -> Option<TermId> {
        self.terms.binary_search_by(|t| t.as_str().cmp(term)).ok().map(|i| i as TermId)
    }

    pub fn term(&self, id: TermId) -> Option<&str> {
        self.terms.get(id as usize).map(String::as_str)
    }

    pub fn df(&self, id: TermId) -> u32 {
        self.df[id as usize]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn min_df(&self) -> u32 {
        self.min_df
    }

    /// Number of documents the frequencies were counted over.
    pub fn n_docs(&self) -> usize {
        self.n_docs
    }
}

/// df(w) = number of pages whose analyzed text contains `w`. Terms with
/// df below `min_df` are dropped.
pub fn build_vocabulary(store: &CorpusStore, analyzer: &Analyzer, min_df: u32, exec: Exec) -> Vocabulary {
    let per_page: Vec<BTreeSet<String>> = exec.map(store.pages(), |p| analyzer.analyze(&p.text).into_iter().collect());
    let mut counts: BTreeMap<String, u32> = BTreeMap::new();
    for set in per_page {
        for term in set {
            *counts.entry(term).or_default() += 1;
        }
    }
    let (terms, df) = counts.into_iter().filter(|(_, df)| *df >= min_df).unzip();
    Vocabulary { terms, df, min_df, n_docs: store.pages().len() }
}
