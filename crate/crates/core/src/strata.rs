//! Stratified tfidf: a page's term weights boosted by the categorical
//! tfidf of the same terms in the page's first few arborescence ancestors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arbor::{ArborError, Arborescence};
use crate::catgraph::{categorical_tfidf, CatGraphError, CategoryVectors, LeafSetIndex};
use crate::corpus::NodeId;
use crate::esa::{combine_word_vectors, EsaIndex, SparseVector};
use crate::exec::Exec;
use crate::textproc::TermId;

#[derive(Debug, Error, PartialEq)]
pub enum StrataError {
    #[error("strata weights must be finite and non-negative, got {0:?}")]
    BadLambda(Vec<f64>),
    #[error("strata weights must not increase with depth, got {0:?}")]
    NotDecreasing(Vec<f64>),
    #[error("unknown strata preset `{0}` (expected half, tenth, flat or a comma-separated list)")]
    UnknownPreset(String),
    #[error("page {0} is not in the index")]
    UnknownPage(u64),
    #[error(transparent)]
    Arbor(#[from] ArborError),
    #[error(transparent)]
    CatGraph(#[from] CatGraphError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StrataConfig {
    /// Weight of the k-th ancestor, nearest first.
    pub lambdas: Vec<f64>,
    pub requires_decreasing: bool,
    /// Read ancestor weights from the truncated category-vector supports;
    /// when false they are recomputed over the full leaf sets.
    pub use_truncated_support: bool,
}

impl Default for StrataConfig {
    fn default() -> Self {
        StrataConfig::with_lambdas(vec![0.5, 0.25, 0.125])
    }
}

impl StrataConfig {
    pub fn with_lambdas(lambdas: Vec<f64>) -> Self {
        StrataConfig { lambdas, requires_decreasing: true, use_truncated_support: true }
    }

    /// `half` = 1/2, 1/4, 1/8; `tenth` = 1/10, 1/20, 1/40; `flat` = 1, 1, 1.
    pub fn preset(name: &str) -> Option<Self> {
        let lambdas = match name {
            "half" => vec![0.5, 0.25, 0.125],
            "tenth" => vec![0.1, 0.05, 0.025],
            "flat" => vec![1.0, 1.0, 1.0],
            _ => return None,
        };
        Some(StrataConfig::with_lambdas(lambdas))
    }

    pub fn validate(&self) -> Result<(), StrataError> {
        if self.lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(StrataError::BadLambda(self.lambdas.clone()));
        }
        if self.requires_decreasing && self.lambdas.windows(2).any(|w| w[1] > w[0]) {
            return Err(StrataError::NotDecreasing(self.lambdas.clone()));
        }
        Ok(())
    }
}

/// A preset name or a comma-separated list of weights.
impl FromStr for StrataConfig {
    type Err = StrataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(cfg) = StrataConfig::preset(s.trim()) {
            return Ok(cfg);
        }
        let lambdas: Result<Vec<f64>, _> = s.split(',').map(|x| x.trim().parse::<f64>()).collect();
        match lambdas {
            Ok(l) if !l.is_empty() => Ok(StrataConfig::with_lambdas(l)),
            _ => Err(StrataError::UnknownPreset(s.to_string())),
        }
    }
}

impl fmt::Display for StrataConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.lambdas.iter().map(|l| l.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// Everything the stratified weights are read from.
#[derive(Debug, Clone, Copy)]
pub struct StrataInputs<'a> {
    pub index: &'a EsaIndex,
    pub arborescence: &'a Arborescence,
    pub leaves: &'a LeafSetIndex,
    pub category_vectors: &'a CategoryVectors,
}

impl StrataInputs<'_> {
    fn ancestor_weight(&self, category: u64, term: TermId, cfg: &StrataConfig) -> Result<f64, StrataError> {
        if cfg.use_truncated_support {
            return Ok(self.category_vectors.get(category).map_or(0.0, |p| p.weight(term)));
        }
        match categorical_tfidf(term, category, self.index, self.leaves, self.category_vectors.variant()) {
            Ok(t) => Ok(t),
            Err(CatGraphError::TermAbsent { .. }) => Ok(0.0),
            Err(e) => Err(e.into()),
        }
    }

    fn strata_of(&self, page: u64, cfg: &StrataConfig) -> Result<Vec<(f64, u64)>, StrataError> {
        let ancestors = self.arborescence.ancestors(NodeId::page(page), cfg.lambdas.len())?;
        Ok(cfg.lambdas.iter().zip(ancestors).filter(|(_, a)| !a.is_page()).map(|(&l, a)| (l, a.id)).collect())
    }

    /// `(term, t'_d(term))` for every term of the page, sorted by term.
    fn weighted_terms(&self, page: u64, cfg: &StrataConfig) -> Result<Vec<(TermId, f64)>, StrataError> {
        let concept = self.index.concept_of(page).ok_or(StrataError::UnknownPage(page))?;
        let strata = self.strata_of(page, cfg)?;
        self.index
            .page_terms(concept)
            .iter()
            .map(|&(t, f)| {
                let mut w = self.index.tfidf_of(f, t);
                for &(lambda, category) in &strata {
                    w += lambda * self.ancestor_weight(category, t, cfg)?;
                }
                Ok((t, w))
            })
            .collect()
    }
}

/// `t_d(w) + sum_k lambda_k * t_{pi^k(d)}(w)` with ancestors counted from
/// the parent upward and stopping at the root. Zero for terms not in `d`.
pub fn stratified_tfidf(
    term: TermId,
    page: u64,
    inputs: &StrataInputs<'_>,
    cfg: &StrataConfig,
) -> Result<f64, StrataError> {
    let concept = inputs.index.concept_of(page).ok_or(StrataError::UnknownPage(page))?;
    let terms = inputs.index.page_terms(concept);
    let Ok(i) = terms.binary_search_by_key(&term, |e| e.0) else {
        return Ok(0.0);
    };
    let mut w = inputs.index.tfidf_of(terms[i].1, term);
    for (lambda, category) in inputs.strata_of(page, cfg)? {
        w += lambda * inputs.ancestor_weight(category, term, cfg)?;
    }
    Ok(w)
}

/// The page's concept vector under stratified weights. With every lambda
/// zero this is bit-identical to [`EsaIndex::page_document_vector`].
pub fn stratified_document_vector(
    page: u64,
    inputs: &StrataInputs<'_>,
    cfg: &StrataConfig,
) -> Result<SparseVector, StrataError> {
    cfg.validate()?;
    let weighted = inputs.weighted_terms(page, cfg)?;
    Ok(combine_word_vectors(inputs.index, &weighted))
}

/// Stratified vectors of every indexed page, in concept order.
pub fn stratified_document_vectors(
    inputs: &StrataInputs<'_>,
    cfg: &StrataConfig,
    exec: Exec,
) -> Result<Vec<SparseVector>, StrataError> {
    cfg.validate()?;
    let pages = inputs.index.page_ids();
    exec.try_map_range(pages.len(), |i| {
        let weighted = inputs.weighted_terms(pages[i], cfg)?;
        Ok(combine_word_vectors(inputs.index, &weighted))
    })
}
