//! Stratified k-fold cross-validation with a nearest-centroid classifier.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::esa::{Space, SparseVector};
use crate::exec::Exec;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("need k >= 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("class `{class}` has {count} documents, fewer than k = {k}")]
    ClassTooSmall { class: String, count: usize, k: usize },
    #[error("need at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("class `{0}` has no training vectors")]
    EmptyClass(String),
    #[error("document {0} is labeled twice")]
    DuplicateDocument(u64),
    #[error("{given} vectors for {expected} documents")]
    VectorCount { given: usize, expected: usize },
    #[error("labels line {line}: {message}")]
    BadLabelLine { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Documents (corpus page ids) with one class each, in id order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledCorpus {
    doc_ids: Vec<u64>,
    labels: Vec<String>,
    classes: Vec<String>,
}

impl LabeledCorpus {
    pub fn new(pairs: impl IntoIterator<Item = (u64, String)>) -> Result<Self, EvalError> {
        let mut pairs: Vec<(u64, String)> = pairs.into_iter().collect();
        pairs.sort();
        if let Some(w) = pairs.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(EvalError::DuplicateDocument(w[0].0));
        }
        let classes: BTreeSet<String> = pairs.iter().map(|p| p.1.clone()).collect();
        let (doc_ids, labels) = pairs.into_iter().unzip();
        Ok(LabeledCorpus { doc_ids, labels, classes: classes.into_iter().collect() })
    }

    pub fn doc_ids(&self) -> &[u64] {
        &self.doc_ids
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Sorted class names.
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    /// Keeps only documents accepted by `keep`.
    pub fn retain(&self, keep: impl Fn(u64) -> bool) -> LabeledCorpus {
        let pairs = self.doc_ids.iter().zip(&self.labels).filter(|(d, _)| keep(**d)).map(|(d, l)| (*d, l.clone()));
        LabeledCorpus::new(pairs).expect("subset of a valid corpus")
    }
}

/// Reads `page_id\tclass` lines; blank lines and `#` comments are skipped.
pub fn read_labels(path: &Path) -> Result<LabeledCorpus, EvalError> {
    let file = std::fs::File::open(path)?;
    parse_labels(BufReader::new(file))
}

pub fn parse_labels<R: BufRead>(input: R) -> Result<LabeledCorpus, EvalError> {
    let mut pairs = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: &str| EvalError::BadLabelLine { line: i + 1, message: message.to_string() };
        let (id, class) = line.split_once('\t').ok_or_else(|| bad("expected `page_id<TAB>class`"))?;
        let id: u64 = id.trim().parse().map_err(|_| bad("page id is not an integer"))?;
        let class = class.trim();
        if class.is_empty() {
            return Err(bad("empty class"));
        }
        pairs.push((id, class.to_string()));
    }
    LabeledCorpus::new(pairs)
}

pub fn write_labels<W: Write>(mut out: W, corpus: &LabeledCorpus) -> io::Result<()> {
    for (d, l) in corpus.doc_ids.iter().zip(&corpus.labels) {
        writeln!(out, "{d}\t{l}")?;
    }
    Ok(())
}

/// `k` disjoint folds of document positions, each sorted. Every class is
/// shuffled under `seed` and dealt round-robin, continuing across classes
/// so fold sizes differ by at most one.
pub fn split_folds(corpus: &LabeledCorpus, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, EvalError> {
    if k < 2 {
        return Err(EvalError::TooFewFolds(k));
    }
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in corpus.labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    if let Some((class, docs)) = by_class.iter().find(|(_, d)| d.len() < k) {
        return Err(EvalError::ClassTooSmall { class: class.to_string(), count: docs.len(), k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for docs in by_class.values_mut() {
        docs.shuffle(&mut rng);
        for &d in docs.iter() {
            folds[next % k].push(d);
            next += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// One unit-length centroid per class.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidModel {
    classes: Vec<String>,
    centroids: Vec<SparseVector>,
}

impl CentroidModel {
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn centroid(&self, class: &str) -> Option<&SparseVector> {
        self.classes.iter().position(|c| c == class).map(|i| &self.centroids[i])
    }

    /// Index of the class with the highest cosine; ties go to the earlier
    /// (lexicographically smaller) class.
    pub fn classify_index(&self, v: &SparseVector) -> usize {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, c) in self.centroids.iter().enumerate() {
            let s = v.cosine(c);
            if s > best.1 {
                best = (i, s);
            }
        }
        best.0
    }

    pub fn classify(&self, v: &SparseVector) -> &str {
        &self.classes[self.classify_index(v)]
    }
}

/// Centroid of each class in `classes` as the normalized mean of its
/// training vectors.
pub fn train_centroid(
    vectors: &[&SparseVector],
    labels: &[&str],
    classes: &[String],
) -> Result<CentroidModel, EvalError> {
    let mut sums: Vec<BTreeMap<u32, f64>> = vec![BTreeMap::new(); classes.len()];
    let mut counts = vec![0usize; classes.len()];
    for (v, l) in vectors.iter().zip(labels) {
        let Ok(c) = classes.binary_search_by(|x| x.as_str().cmp(l)) else {
            continue;
        };
        counts[c] += 1;
        for &(dim, w) in v.entries() {
            *sums[c].entry(dim).or_insert(0.0) += w;
        }
    }
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(EvalError::EmptyClass(classes[c].clone()));
    }
    let centroids = sums
        .into_iter()
        .zip(&counts)
        .map(|(sum, &n)| {
            let entries = sum.into_iter().map(|(d, w)| (d, w / n as f64)).collect();
            SparseVector::new(Space::Concept, entries).expect("mean of valid vectors").normalized()
        })
        .collect();
    Ok(CentroidModel { classes: classes.to_vec(), centroids })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub class: String,
    pub support: u64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: String,
    pub k: usize,
    pub seed: u64,
    pub n_docs: usize,
    pub classes: Vec<String>,
    /// Correct predictions over all test documents (trace / total).
    pub accuracy: f64,
    pub fold_accuracies: Vec<f64>,
    pub mean_fold_accuracy: f64,
    /// `confusion[true][predicted]`, classes in sorted order.
    pub confusion: Vec<Vec<u64>>,
    pub per_class: Vec<ClassStats>,
    pub macro_precision: f64,
    /// Concept dimensions that are nonzero in at least one document vector.
    pub concept_subspace_dim: usize,
    /// Only meaningful for margin classifiers; the centroid model has none.
    pub support_vectors: Option<u64>,
}

/// Distinct concept dimensions used by any of `vectors`.
pub fn concept_subspace_dim(vectors: &[SparseVector]) -> usize {
    let dims: BTreeSet<u32> = vectors.iter().flat_map(|v| v.entries().iter().map(|e| e.0)).collect();
    dims.len()
}

/// Trains on k-1 folds and tests on the remaining one, for every fold.
/// `vectors[i]` is the vector of `corpus.doc_ids()[i]`.
pub fn cross_validate(
    corpus: &LabeledCorpus,
    vectors: &[SparseVector],
    mode: &str,
    k: usize,
    seed: u64,
    exec: Exec,
) -> Result<EvalReport, EvalError> {
    if vectors.len() != corpus.len() {
        return Err(EvalError::VectorCount { given: vectors.len(), expected: corpus.len() });
    }
    if corpus.classes.len() < 2 {
        return Err(EvalError::TooFewClasses(corpus.classes.len()));
    }
    let folds = split_folds(corpus, k, seed)?;
    let class_ix = |l: &str| corpus.classes.binary_search_by(|c| c.as_str().cmp(l)).expect("known class");

    let predictions: Vec<Vec<(usize, usize)>> = exec.try_map_range(k, |f| -> Result<_, EvalError> {
        let mut train_v = Vec::new();
        let mut train_l = Vec::new();
        for (g, fold) in folds.iter().enumerate() {
            if g != f {
                for &i in fold {
                    train_v.push(&vectors[i]);
                    train_l.push(corpus.labels[i].as_str());
                }
            }
        }
        let model = train_centroid(&train_v, &train_l, &corpus.classes)?;
        Ok(folds[f].iter().map(|&i| (class_ix(&corpus.labels[i]), model.classify_index(&vectors[i]))).collect())
    })?;

    let c = corpus.classes.len();
    let mut confusion = vec![vec![0u64; c]; c];
    let mut fold_accuracies = Vec::with_capacity(k);
    for fold in &predictions {
        let mut correct = 0;
        for &(t, p) in fold {
            confusion[t][p] += 1;
            correct += usize::from(t == p);
        }
        fold_accuracies.push(if fold.is_empty() { 0.0 } else { correct as f64 / fold.len() as f64 });
    }
    let total: u64 = confusion.iter().flatten().sum();
    let trace: u64 = (0..c).map(|i| confusion[i][i]).sum();
    let per_class: Vec<ClassStats> = (0..c)
        .map(|i| {
            let support: u64 = confusion[i].iter().sum();
            let predicted: u64 = confusion.iter().map(|row| row[i]).sum();
            let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
            ClassStats {
                class: corpus.classes[i].clone(),
                support,
                precision: ratio(confusion[i][i], predicted),
                recall: ratio(confusion[i][i], support),
            }
        })
        .collect();
    Ok(EvalReport {
        mode: mode.to_string(),
        k,
        seed,
        n_docs: corpus.len(),
        classes: corpus.classes.clone(),
        accuracy: trace as f64 / total as f64,
        mean_fold_accuracy: fold_accuracies.iter().sum::<f64>() / k as f64,
        fold_accuracies,
        macro_precision: per_class.iter().map(|s| s.precision).sum::<f64>() / c as f64,
        per_class,
        confusion,
        concept_subspace_dim: concept_subspace_dim(vectors),
        support_vectors: None,
    })
}

impl EvalReport {
    /// `section\tkey\tvalue` rows.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "section\tkey\tvalue")?;
        writeln!(out, "summary\tmode\t{}", self.mode)?;
        writeln!(out, "summary\tk\t{}", self.k)?;
        writeln!(out, "summary\tseed\t{}", self.seed)?;
        writeln!(out, "summary\tdocuments\t{}", self.n_docs)?;
        writeln!(out, "summary\taccuracy\t{}", self.accuracy)?;
        writeln!(out, "summary\tmean_fold_accuracy\t{}", self.mean_fold_accuracy)?;
        writeln!(out, "summary\tmacro_precision\t{}", self.macro_precision)?;
        writeln!(out, "summary\tconcept_subspace_dim\t{}", self.concept_subspace_dim)?;
        match self.support_vectors {
            Some(n) => writeln!(out, "summary\tsupport_vectors\t{n}")?,
            None => writeln!(out, "summary\tsupport_vectors\t-")?,
        }
        for (i, a) in self.fold_accuracies.iter().enumerate() {
            writeln!(out, "fold\t{i}\t{a}")?;
        }
        for s in &self.per_class {
            writeln!(out, "support\t{}\t{}", s.class, s.support)?;
            writeln!(out, "precision\t{}\t{}", s.class, s.precision)?;
            writeln!(out, "recall\t{}\t{}", s.class, s.recall)?;
        }
        for (t, row) in self.confusion.iter().enumerate() {
            for (p, n) in row.iter().enumerate() {
                writeln!(out, "confusion\t{}>{}\t{n}", self.classes[t], self.classes[p])?;
            }
        }
        Ok(())
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mode: {}", self.mode);
        let _ = writeln!(
            s,
            "documents: {} in {} classes, {}-fold (seed {})",
            self.n_docs,
            self.classes.len(),
            self.k,
            self.seed
        );
        let _ = writeln!(s, "accuracy: {:.2}%", 100.0 * self.accuracy);
        let _ = writeln!(s, "mean fold accuracy: {:.2}%", 100.0 * self.mean_fold_accuracy);
        let _ = writeln!(s, "macro precision: {:.2}%", 100.0 * self.macro_precision);
        let _ = writeln!(s, "concept subspace dimension: {}", self.concept_subspace_dim);
        let width = self.classes.iter().map(|c| c.len()).max().unwrap_or(0).max(6);
        let _ = write!(s, "{:width$}", "");
        for c in &self.classes {
            let _ = write!(s, " {c:>width$}");
        }
        s.push('\n');
        for (t, row) in self.confusion.iter().enumerate() {
            let _ = write!(s, "{:width$}", self.classes[t]);
            for n in row {
                let _ = write!(s, " {n:>width$}");
            }
            s.push('\n');
        }
        s
    }
}
