//! Wiki-like corpora: pages, categories, memberships and links.
//!
//! Pages and categories live in separate id spaces; [`NodeId`] tags an id
//! with its kind so the graph modules can treat both uniformly.

mod filter;
mod format;
mod synth;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use filter::{filter_pages, link_degrees, FilterConfig};
pub use format::{parse_corpus, read_corpus, serialize_corpus, write_corpus, CORPUS_VERSION};
pub use synth::{gen_synthetic_wiki, SyntheticConfig, SyntheticWiki};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Page,
    Category,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Page => f.write_str("page"),
            NodeKind::Category => f.write_str("category"),
        }
    }
}

/// A page or category id tagged with its kind. Pages order before
/// categories; within a kind, ids order numerically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId {
    pub kind: NodeKind,
    pub id: u64,
}

impl NodeId {
    pub const fn page(id: u64) -> Self {
        NodeId { kind: NodeKind::Page, id }
    }

    pub const fn category(id: u64) -> Self {
        NodeId { kind: NodeKind::Category, id }
    }

    pub fn is_page(&self) -> bool {
        self.kind == NodeKind::Page
    }
}

/// Rendered as `p:<id>` or `c:<id>`.
impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            NodeKind::Page => write!(f, "p:{}", self.id),
            NodeKind::Category => write!(f, "c:{}", self.id),
        }
    }
}

impl FromStr for NodeId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (tag, num) = s.split_once(':').ok_or_else(|| format!("node id `{s}` must look like p:<n> or c:<n>"))?;
        let id = num.parse::<u64>().map_err(|e| format!("node id `{s}`: {e}"))?;
        match tag {
            "p" => Ok(NodeId::page(id)),
            "c" => Ok(NodeId::category(id)),
            _ => Err(format!("node id `{s}`: unknown kind `{tag}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageRecord {
    pub id: u64,
    pub title: String,
    pub text: String,
    /// Memberships page -> category.
    pub categories: Vec<u64>,
    /// Outgoing links to other pages.
    pub links: Vec<u64>,
    /// Link degrees measured before any filtering; set by [`filter_pages`]
    /// so that repeated filtering keeps judging pages against the original
    /// graph.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link_basis: Option<LinkBasis>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkBasis {
    pub in_links: u32,
    pub out_links: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryRecord {
    pub id: u64,
    pub title: String,
    /// Inclusions child -> parent, toward the root.
    pub parents: Vec<u64>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: the first record must be a meta header")]
    MissingHeader { line: usize },
    #[error("line {line}: unexpected second meta header")]
    DuplicateHeader { line: usize },
    #[error("unsupported corpus version {0}")]
    UnsupportedVersion(u32),
    #[error("empty corpus stream (no meta header)")]
    Empty,
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: NodeKind, id: u64 },
    #[error("{owner} references unknown {kind} id {id}")]
    DanglingReference { owner: NodeId, kind: NodeKind, id: u64 },
    #[error("root category {0} does not exist")]
    MissingRoot(u64),
    #[error("{0} references itself")]
    SelfReference(NodeId),
    #[error("{0} has an empty title")]
    EmptyTitle(NodeId),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// A validated corpus. Records are kept sorted by id, and every id list is
/// sorted and free of duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStore {
    root: u64,
    pages: Vec<PageRecord>,
    categories: Vec<CategoryRecord>,
}

impl CorpusStore {
    /// Normalizes and validates. Duplicate entries inside id lists are
    /// collapsed; self references, dangling ids and duplicate records are
    /// errors.
    pub fn new(
        root: u64,
        mut pages: Vec<PageRecord>,
        mut categories: Vec<CategoryRecord>,
    ) -> Result<Self, CorpusError> {
        pages.sort_by_key(|p| p.id);
        categories.sort_by_key(|c| c.id);
        if let Some(w) = pages.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(CorpusError::DuplicateId { kind: NodeKind::Page, id: w[0].id });
        }
        if let Some(w) = categories.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(CorpusError::DuplicateId { kind: NodeKind::Category, id: w[0].id });
        }
        let page_ids: HashSet<u64> = pages.iter().map(|p| p.id).collect();
        let cat_ids: HashSet<u64> = categories.iter().map(|c| c.id).collect();
        if !cat_ids.contains(&root) {
            return Err(CorpusError::MissingRoot(root));
        }

        for page in &mut pages {
            let owner = NodeId::page(page.id);
            if page.title.is_empty() {
                return Err(CorpusError::EmptyTitle(owner));
            }
            sort_dedup(&mut page.categories);
            sort_dedup(&mut page.links);
            if page.links.contains(&page.id) {
                return Err(CorpusError::SelfReference(owner));
            }
            if let Some(&id) = page.categories.iter().find(|id| !cat_ids.contains(id)) {
                return Err(CorpusError::DanglingReference { owner, kind: NodeKind::Category, id });
            }
            if let Some(&id) = page.links.iter().find(|id| !page_ids.contains(id)) {
                return Err(CorpusError::DanglingReference { owner, kind: NodeKind::Page, id });
            }
        }
        for cat in &mut categories {
            let owner = NodeId::category(cat.id);
            if cat.title.is_empty() {
                return Err(CorpusError::EmptyTitle(owner));
            }
            sort_dedup(&mut cat.parents);
            if cat.parents.contains(&cat.id) {
                return Err(CorpusError::SelfReference(owner));
            }
            if let Some(&id) = cat.parents.iter().find(|id| !cat_ids.contains(id)) {
                return Err(CorpusError::DanglingReference { owner, kind: NodeKind::Category, id });
            }
        }
        Ok(CorpusStore { root, pages, categories })
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn pages(&self) -> &[PageRecord] {
        &self.pages
    }

    pub fn categories(&self) -> &[CategoryRecord] {
        &self.categories
    }

    pub fn page(&self, id: u64) -> Option<&PageRecord> {
        self.page_index(id).map(|i| &self.pages[i])
    }

    pub fn category(&self, id: u64) -> Option<&CategoryRecord> {
        self.categories.binary_search_by_key(&id, |c| c.id).ok().map(|i| &self.categories[i])
    }

    /// Position of a page in id order; this is also its concept dimension.
    pub fn page_index(&self, id: u64) -> Option<usize> {
        self.pages.binary_search_by_key(&id, |p| p.id).ok()
    }

    pub fn membership_count(&self) -> usize {
        self.pages.iter().map(|p| p.categories.len()).sum()
    }
}

fn sort_dedup(ids: &mut Vec<u64>) {
    ids.sort_unstable();
    ids.dedup();
}
