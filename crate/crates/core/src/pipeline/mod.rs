//! End-to-end orchestration with an on-disk stage cache.
//!
//! Stages run in dependency order: ingest, filter, vocab, index,
//! vectorize-baseline, catvecs, weights, arborify, vectorize-stratified,
//! evaluate. Edge weights read the baseline page vectors, hence the early
//! baseline stage.
//! Each stage output is stored under a key derived from its inputs, so a
//! rerun only recomputes stages whose inputs changed.

mod cache;
mod config;

use std::error::Error;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arbor::{chu_liu_edmonds, reverse_and_cost, Arborescence};
use crate::catgraph::{
    build_category_vectors, build_graph, leaf_sets, weight_edges, write_weighted_edges, CategoryGraph, CategoryVectors,
    LeafSetIndex, WeightedEdge,
};
use crate::corpus::{filter_pages, parse_corpus, CorpusStore, NodeId};
use crate::esa::{write_vector_file, EsaIndex, SparseVector};
use crate::eval::{cross_validate, read_labels, EvalReport};
use crate::exec::Exec;
use crate::strata::{stratified_document_vectors, StrataInputs};
use crate::textproc::{build_vocabulary, Analyzer, Vocabulary};

pub use cache::{content_hash, stage_key, StageCache};
pub use config::{
    AnalyzerSection, ArborSection, CacheSection, CatvecSection, CorpusSection, EvalSection, ExecSection, OutputSection,
    PipelineConfig, StemmerChoice, VocabSection,
};

pub const STAGES: [&str; 10] = [
    "ingest",
    "filter",
    "vocab",
    "index",
    "vectorize-baseline",
    "catvecs",
    "weights",
    "arborify",
    "vectorize-stratified",
    "evaluate",
];

type BoxError = Box<dyn Error + Send + Sync>;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("invalid configuration: {0}")]
    Validation(String),
    #[error("stage `{stage}` failed")]
    Stage {
        stage: &'static str,
        #[source]
        source: BoxError,
    },
}

impl PipelineError {
    /// 2 for configuration and validation problems, 3 for stage failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Validation(_) => 2,
            PipelineError::Stage { .. } => 3,
        }
    }

    fn stage(stage: &'static str) -> impl Fn(BoxError) -> PipelineError {
        move |source| PipelineError::Stage { stage, source }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageOutcome {
    Hit,
    Computed,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageStatus {
    pub stage: &'static str,
    pub outcome: StageOutcome,
    pub key: String,
}

/// Both cross-validation reports over the same labeled pages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub baseline: EvalReport,
    pub stratified: EvalReport,
    /// Labeled ids that are not pages of the filtered corpus.
    pub labels_without_page: usize,
}

impl Evaluation {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        s.push_str(&self.baseline.summary());
        s.push('\n');
        s.push_str(&self.stratified.summary());
        s.push('\n');
        s.push_str(&format!(
            "accuracy change: {:+.2} points\n",
            100.0 * (self.stratified.accuracy - self.baseline.accuracy)
        ));
        if self.labels_without_page > 0 {
            s.push_str(&format!("labels without a corpus page: {}\n", self.labels_without_page));
        }
        s
    }
}

#[derive(Debug, Clone)]
struct Artifact<T> {
    key: String,
    value: Arc<T>,
}

impl<T> Artifact<T> {
    fn new(key: String, value: T) -> Self {
        Artifact { key, value: Arc::new(value) }
    }
}

/// Lazily computed, memoized pipeline stages over one config.
pub struct Pipeline {
    cfg: PipelineConfig,
    cache: StageCache,
    analyzer: Analyzer,
    exec: Exec,
    log: Vec<StageStatus>,
    ingest: Option<Artifact<CorpusStore>>,
    filtered: Option<Artifact<CorpusStore>>,
    vocab: Option<Artifact<Vocabulary>>,
    index: Option<Artifact<EsaIndex>>,
    graph: Option<(Arc<CategoryGraph>, Arc<LeafSetIndex>)>,
    catvecs: Option<Artifact<CategoryVectors>>,
    weights: Option<Artifact<Vec<WeightedEdge>>>,
    arbor: Option<Artifact<Arborescence>>,
    baseline: Option<Artifact<Vec<SparseVector>>>,
    stratified: Option<Artifact<Vec<SparseVector>>>,
    evaluation: Option<Option<Artifact<Evaluation>>>,
}

/// Paths written by [`Pipeline::write_outputs`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFiles {
    pub concepts: PathBuf,
    pub baseline_vectors: PathBuf,
    pub stratified_vectors: PathBuf,
    pub categories: PathBuf,
    pub category_vectors: PathBuf,
    pub weighted_edges: PathBuf,
    pub arborescence: PathBuf,
    /// Baseline TSV, stratified TSV and the text summary, when labels are
    /// configured.
    pub evaluation: Option<(PathBuf, PathBuf, PathBuf)>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub stages: Vec<StageStatus>,
    pub outputs: OutputFiles,
    pub evaluation: Option<Evaluation>,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Result<Self, PipelineError> {
        cfg.validate()?;
        let analyzer = cfg.analyzer()?;
        Ok(Pipeline {
            cache: StageCache::new(cfg.cache.dir.clone()),
            exec: cfg.exec(),
            analyzer,
            cfg,
            log: Vec::new(),
            ingest: None,
            filtered: None,
            vocab: None,
            index: None,
            graph: None,
            catvecs: None,
            weights: None,
            arbor: None,
            baseline: None,
            stratified: None,
            evaluation: None,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn analyzer(&self) -> &Analyzer {
        &self.analyzer
    }

    /// Stages touched so far, in execution order.
    pub fn stage_log(&self) -> &[StageStatus] {
        &self.log
    }

    fn cached<T, F>(&mut self, stage: &'static str, key: String, compute: F) -> Result<Artifact<T>, PipelineError>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce(&Self) -> Result<T, BoxError>,
    {
        if let Some(value) = self.cache.load::<T>(stage, &key) {
            self.log.push(StageStatus { stage, outcome: StageOutcome::Hit, key: key.clone() });
            return Ok(Artifact::new(key, value));
        }
        let value = compute(self).map_err(PipelineError::stage(stage))?;
        self.cache.store(stage, &key, &value).map_err(|e| PipelineError::stage(stage)(e.into()))?;
        self.log.push(StageStatus { stage, outcome: StageOutcome::Computed, key: key.clone() });
        Ok(Artifact::new(key, value))
    }

    fn ingest(&mut self) -> Result<Artifact<CorpusStore>, PipelineError> {
        if let Some(a) = &self.ingest {
            return Ok(a.clone());
        }
        let path = self.cfg.corpus.path.clone();
        let bytes = fs::read(&path)
            .map_err(|e| PipelineError::stage("ingest")(format!("cannot read {}: {e}", path.display()).into()))?;
        let key = stage_key("ingest", &[], &content_hash(&bytes));
        let a = self.cached("ingest", key, |_| Ok(parse_corpus(&bytes[..])?))?;
        self.ingest = Some(a.clone());
        Ok(a)
    }

    fn filter(&mut self) -> Result<Artifact<CorpusStore>, PipelineError> {
        if let Some(a) = &self.filtered {
            return Ok(a.clone());
        }
        let input = self.ingest()?;
        let key = stage_key("filter", &[&input.key], &(&self.cfg.filter, self.analyzer.fingerprint()));
        let a = self.cached("filter", key, |p| {
            let store = filter_pages(&input.value, &p.cfg.filter, &p.analyzer, p.exec);
            if store.pages().is_empty() {
                return Err("no page passes the filter thresholds".into());
            }
            Ok(store)
        })?;
        self.filtered = Some(a.clone());
        Ok(a)
    }

    /// The filtered corpus.
    pub fn corpus(&mut self) -> Result<Arc<CorpusStore>, PipelineError> {
        Ok(self.filter()?.value)
    }

    fn vocab(&mut self) -> Result<Artifact<Vocabulary>, PipelineError> {
        if let Some(a) = &self.vocab {
            return Ok(a.clone());
        }
        let input = self.filter()?;
        let key = stage_key("vocab", &[&input.key], &(self.cfg.vocab.min_df, self.analyzer.fingerprint()));
        let a =
            self.cached("vocab", key, |p| Ok(build_vocabulary(&input.value, &p.analyzer, p.cfg.vocab.min_df, p.exec)))?;
        self.vocab = Some(a.clone());
        Ok(a)
    }

    fn index_artifact(&mut self) -> Result<Artifact<EsaIndex>, PipelineError> {
        if let Some(a) = &self.index {
            return Ok(a.clone());
        }
        let store = self.filter()?;
        let vocab = self.vocab()?;
        let key = stage_key("index", &[&vocab.key, &store.key], &self.analyzer.fingerprint());
        let a = self
            .cached("index", key, |p| Ok(EsaIndex::build(&store.value, &p.analyzer, (*vocab.value).clone(), p.exec)))?;
        self.index = Some(a.clone());
        Ok(a)
    }

    pub fn index(&mut self) -> Result<Arc<EsaIndex>, PipelineError> {
        Ok(self.index_artifact()?.value)
    }

    /// Category graph and leaf sets of the filtered corpus (not cached on
    /// disk; both are cheap to rebuild).
    pub fn graph(&mut self) -> Result<(Arc<CategoryGraph>, Arc<LeafSetIndex>), PipelineError> {
        if let Some(g) = &self.graph {
            return Ok(g.clone());
        }
        let store = self.filter()?;
        let graph = build_graph(&store.value);
        let leaves = leaf_sets(&graph);
        let g = (Arc::new(graph), Arc::new(leaves));
        self.graph = Some(g.clone());
        Ok(g)
    }

    fn catvecs(&mut self) -> Result<Artifact<CategoryVectors>, PipelineError> {
        if let Some(a) = &self.catvecs {
            return Ok(a.clone());
        }
        let store = self.filter()?;
        let index = self.index_artifact()?;
        let (_, leaves) = self.graph()?;
        let key = stage_key("catvecs", &[&index.key, &store.key], &self.cfg.catvec);
        let a = self.cached("catvecs", key, |p| {
            Ok(build_category_vectors(&index.value, &leaves, p.cfg.catvec.max_nnz, p.cfg.catvec.idf, p.exec))
        })?;
        self.catvecs = Some(a.clone());
        Ok(a)
    }

    pub fn category_vectors(&mut self) -> Result<Arc<CategoryVectors>, PipelineError> {
        Ok(self.catvecs()?.value)
    }

    fn baseline_artifact(&mut self) -> Result<Artifact<Vec<SparseVector>>, PipelineError> {
        if let Some(a) = &self.baseline {
            return Ok(a.clone());
        }
        let index = self.index_artifact()?;
        let key = stage_key("vectorize-baseline", &[&index.key], &());
        let a = self.cached("vectorize-baseline", key, |p| {
            let idx = &index.value;
            Ok(p.exec.map_range(idx.n_concepts(), |c| idx.page_document_vector(c as u32)))
        })?;
        self.baseline = Some(a.clone());
        Ok(a)
    }

    /// Baseline concept vectors of every page, in concept order.
    pub fn baseline_vectors(&mut self) -> Result<Arc<Vec<SparseVector>>, PipelineError> {
        Ok(self.baseline_artifact()?.value)
    }

    fn weights(&mut self) -> Result<Artifact<Vec<WeightedEdge>>, PipelineError> {
        if let Some(a) = &self.weights {
            return Ok(a.clone());
        }
        let store = self.filter()?;
        let catvecs = self.catvecs()?;
        let pages = self.baseline_artifact()?;
        let index = self.index_artifact()?;
        let (graph, _) = self.graph()?;
        let key = stage_key("weights", &[&catvecs.key, &pages.key, &store.key], &());
        let a = self.cached("weights", key, |_| {
            let lookup = |n: NodeId| {
                if n.is_page() {
                    index.value.concept_of(n.id).map(|c| &pages.value[c as usize])
                } else {
                    catvecs.value.get(n.id).map(|p| &p.vector)
                }
            };
            Ok(weight_edges(&graph, lookup)?)
        })?;
        self.weights = Some(a.clone());
        Ok(a)
    }

    pub fn weighted_edges(&mut self) -> Result<Arc<Vec<WeightedEdge>>, PipelineError> {
        Ok(self.weights()?.value)
    }

    fn arbor(&mut self) -> Result<Artifact<Arborescence>, PipelineError> {
        if let Some(a) = &self.arbor {
            return Ok(a.clone());
        }
        let store = self.filter()?;
        let weights = self.weights()?;
        let (graph, _) = self.graph()?;
        let root = NodeId::category(self.cfg.arbor.root.unwrap_or(store.value.root()));
        let key = stage_key("arborify", &[&weights.key, &store.key], &root);
        let a = self.cached("arborify", key, |_| {
            let digraph = reverse_and_cost(&graph, &weights.value, root)?;
            Ok(chu_liu_edmonds(&digraph)?)
        })?;
        self.arbor = Some(a.clone());
        Ok(a)
    }

    pub fn arborescence(&mut self) -> Result<Arc<Arborescence>, PipelineError> {
        Ok(self.arbor()?.value)
    }

    fn stratified_artifact(&mut self) -> Result<Artifact<Vec<SparseVector>>, PipelineError> {
        if let Some(a) = &self.stratified {
            return Ok(a.clone());
        }
        let index = self.index_artifact()?;
        let catvecs = self.catvecs()?;
        let arbor = self.arbor()?;
        let (_, leaves) = self.graph()?;
        let key = stage_key("vectorize-stratified", &[&index.key, &catvecs.key, &arbor.key], &self.cfg.strata);
        let a = self.cached("vectorize-stratified", key, |p| {
            let inputs = StrataInputs {
                index: &index.value,
                arborescence: &arbor.value,
                leaves: &leaves,
                category_vectors: &catvecs.value,
            };
            Ok(stratified_document_vectors(&inputs, &p.cfg.strata, p.exec)?)
        })?;
        self.stratified = Some(a.clone());
        Ok(a)
    }

    /// Stratified concept vectors of every page, in concept order.
    pub fn stratified_vectors(&mut self) -> Result<Arc<Vec<SparseVector>>, PipelineError> {
        Ok(self.stratified_artifact()?.value)
    }

    fn evaluation_artifact(&mut self) -> Result<Option<Artifact<Evaluation>>, PipelineError> {
        if let Some(a) = &self.evaluation {
            return Ok(a.clone());
        }
        let baseline = self.baseline_artifact()?;
        let stratified = self.stratified_artifact()?;
        let Some(labels_path) = self.cfg.eval.labels.clone() else {
            self.log.push(StageStatus { stage: "evaluate", outcome: StageOutcome::Skipped, key: String::new() });
            self.evaluation = Some(None);
            return Ok(None);
        };
        let index = self.index_artifact()?;
        let labels_bytes = fs::read(&labels_path).map_err(|e| {
            PipelineError::stage("evaluate")(format!("cannot read labels {}: {e}", labels_path.display()).into())
        })?;
        let key = stage_key(
            "evaluate",
            &[&baseline.key, &stratified.key],
            &(self.cfg.eval.k, self.cfg.eval.seed, content_hash(&labels_bytes)),
        );
        let a = self.cached("evaluate", key, |p| {
            let all = read_labels(&labels_path)?;
            let corpus = all.retain(|d| index.value.concept_of(d).is_some());
            let pick = |vs: &[SparseVector]| -> Vec<SparseVector> {
                corpus.doc_ids().iter().map(|&d| vs[index.value.concept_of(d).unwrap() as usize].clone()).collect()
            };
            let (k, seed) = (p.cfg.eval.k, p.cfg.eval.seed);
            Ok(Evaluation {
                baseline: cross_validate(&corpus, &pick(&baseline.value), "baseline", k, seed, p.exec)?,
                stratified: cross_validate(
                    &corpus,
                    &pick(&stratified.value),
                    &format!("stratified {}", p.cfg.strata),
                    k,
                    seed,
                    p.exec,
                )?,
                labels_without_page: all.len() - corpus.len(),
            })
        })?;
        self.evaluation = Some(Some(a.clone()));
        Ok(Some(a))
    }

    /// Cross-validation of both vector sets; `None` without `eval.labels`.
    pub fn evaluation(&mut self) -> Result<Option<Arc<Evaluation>>, PipelineError> {
        Ok(self.evaluation_artifact()?.map(|a| a.value))
    }

    /// Runs every stage and writes all output files.
    pub fn run(mut self) -> Result<RunOutcome, PipelineError> {
        let evaluation = self.evaluation()?.map(|e| (*e).clone());
        let outputs = self.write_outputs()?;
        Ok(RunOutcome { stages: self.log, outputs, evaluation })
    }

    /// Writes vector files, the weighted edge list, the arborescence and
    /// (with labels) the evaluation reports into `output.dir`.
    pub fn write_outputs(&mut self) -> Result<OutputFiles, PipelineError> {
        let dir = self.cfg.output.dir.clone();
        let index = self.index()?;
        let baseline = self.baseline_vectors()?;
        let stratified = self.stratified_vectors()?;
        let catvecs = self.category_vectors()?;
        let weights = self.weighted_edges()?;
        let arbor = self.arborescence()?;
        let evaluation = self.evaluation()?;

        let io_err = |e: io::Error| PipelineError::stage("output")(format!("{}: {e}", dir.display()).into());
        fs::create_dir_all(&dir).map_err(io_err)?;
        let files = OutputFiles {
            concepts: dir.join("concepts.tsv"),
            baseline_vectors: dir.join("baseline.esav"),
            stratified_vectors: dir.join("stratified.esav"),
            categories: dir.join("categories.tsv"),
            category_vectors: dir.join("category_vectors.esav"),
            weighted_edges: dir.join("weighted_edges.tsv"),
            arborescence: dir.join("arborescence.tsv"),
            evaluation: evaluation.as_ref().map(|_| {
                (dir.join("eval_baseline.tsv"), dir.join("eval_stratified.tsv"), dir.join("eval_summary.txt"))
            }),
        };
        let write = |path: &Path, f: &dyn Fn(&mut dyn Write) -> io::Result<()>| -> io::Result<()> {
            let mut out = BufWriter::new(fs::File::create(path)?);
            f(&mut out)?;
            out.flush()
        };
        (|| -> io::Result<()> {
            write(&files.concepts, &|out| write_concepts(out, &index))?;
            write_vector_file(&files.baseline_vectors, &baseline)?;
            write_vector_file(&files.stratified_vectors, &stratified)?;
            write(&files.categories, &|out| write_category_rows(out, &catvecs))?;
            write_vector_file(&files.category_vectors, &category_vector_list(&catvecs))?;
            write(&files.weighted_edges, &|out| write_weighted_edges(out, &weights))?;
            write(&files.arborescence, &|out| arbor.write_tsv(out))?;
            if let (Some(ev), Some((b, s, summary))) = (&evaluation, &files.evaluation) {
                write(b, &|out| ev.baseline.write_tsv(out))?;
                write(s, &|out| ev.stratified.write_tsv(out))?;
                fs::write(summary, ev.summary())?;
            }
            Ok(())
        })()
        .map_err(io_err)?;
        Ok(files)
    }
}

/// `dim\tpage_id`: which page each concept dimension stands for.
pub fn write_concepts(out: &mut dyn Write, index: &EsaIndex) -> io::Result<()> {
    writeln!(out, "dim\tpage_id")?;
    for (d, id) in index.page_ids().iter().enumerate() {
        writeln!(out, "{d}\t{id}")?;
    }
    Ok(())
}

/// `row\tcategory_id`: the category of each record in the category vector
/// file.
pub fn write_category_rows(out: &mut dyn Write, catvecs: &CategoryVectors) -> io::Result<()> {
    writeln!(out, "row\tcategory_id")?;
    for (r, id) in catvecs.category_ids().iter().enumerate() {
        writeln!(out, "{r}\t{id}")?;
    }
    Ok(())
}

pub fn category_vector_list(catvecs: &CategoryVectors) -> Vec<SparseVector> {
    catvecs.profiles().iter().map(|p| p.vector.clone()).collect()
}

/// Validates the config, runs every stage (reusing cached outputs) and
/// writes the output files.
pub fn run_pipeline(cfg: PipelineConfig) -> Result<RunOutcome, PipelineError> {
    Pipeline::new(cfg)?.run()
}
