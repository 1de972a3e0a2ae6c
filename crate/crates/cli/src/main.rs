//! `wikistrata` command line.
//!
//! Every subcommand reads the same TOML config (`--config`), runs the
//! pipeline stages it needs through the on-disk cache, and writes its
//! files into `output.dir`. Exit codes: 0 on success, 2 for invalid
//! configuration or arguments, 3 when a stage fails.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use wikistrata::catgraph::{cycle_census, degree_stats, write_weighted_edges, CensusMode, FitWindow};
use wikistrata::corpus::{write_corpus, SyntheticConfig};
use wikistrata::esa::write_vector_file;
use wikistrata::eval::{write_labels, LabeledCorpus};
use wikistrata::pipeline::{
    category_vector_list, write_category_rows, write_concepts, Pipeline, PipelineConfig, PipelineError, StageOutcome,
};
use wikistrata::strata::StrataConfig;

#[derive(Parser)]
#[command(name = "wikistrata", version, about = "Stratified explicit semantic analysis")]
struct Cli {
    /// TOML config; relative paths inside it are taken against its directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Corpus file (overrides corpus.path).
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,

    /// Stopword list, one term per line (overrides analyzer.stopwords).
    #[arg(long, global = true)]
    stopwords: Option<PathBuf>,

    /// Output directory (overrides output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Run every stage on one thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the ESA index; writes concepts.tsv and baseline.esav.
    BuildIndex,
    /// ESA relatedness of two words.
    Relate { term_a: String, term_b: String },
    /// Category vectors and weighted category-graph edges.
    BuildCatvecs,
    /// Category-graph diagnostics, printed as TSV.
    Diagnose {
        #[command(subcommand)]
        what: Diagnose,
    },
    /// Minimum-cost arborescence of the weighted, reversed category graph.
    Arborify {
        /// Root category id (overrides arbor.root).
        #[arg(long)]
        root: Option<u64>,
    },
    /// Baseline and stratified document vectors.
    Vectorize {
        /// `half`, `tenth`, `flat` or comma-separated weights (overrides strata.lambdas).
        #[arg(long)]
        strata: Option<String>,
    },
    /// Every stage, then cross-validation of both vector sets when labels are configured.
    Run,
    /// Cross-validate one vector set.
    Evaluate {
        #[arg(long, value_enum)]
        mode: Mode,
    },
    /// Write a planted-topic corpus, its labels and a matching config.
    Synth {
        /// Target directory.
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        topics: usize,
        #[arg(long, default_value_t = 50)]
        pages_per_topic: usize,
    },
}

#[derive(Subcommand)]
enum Diagnose {
    /// Exact census of 2- and 3-cycles among category inclusions.
    Cycles,
    /// In/out degree histograms and power-law fits.
    Degrees,
    /// Seeded parent walks from every page.
    Walk {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Baseline,
    Stratified,
}

fn invalid(message: impl Into<String>) -> anyhow::Error {
    PipelineError::Validation(message.into()).into()
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(p) = &cli.corpus {
        cfg.corpus.path = p.clone();
    }
    if let Some(p) = &cli.stopwords {
        cfg.analyzer.stopwords = Some(p.clone());
    }
    if let Some(p) = &cli.out {
        cfg.output.dir = p.clone();
    }
    if cli.sequential {
        cfg.exec.parallel = false;
    }
    Ok(cfg)
}

fn parent_dir(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    parent_dir(path)?;
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<()> {
    let mut out = create(path)?;
    f(&mut out).and_then(|_| out.flush()).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_vectors(path: &Path, vectors: &[wikistrata::esa::SparseVector]) -> Result<()> {
    parent_dir(path)?;
    write_vector_file(path, vectors).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    if let Command::Synth { dir, seed, topics, pages_per_topic } = &cli.command {
        return synth(dir, *seed, *topics, *pages_per_topic);
    }
    let mut cfg = load_config(&cli)?;
    match &cli.command {
        Command::Arborify { root: Some(root) } => cfg.arbor.root = Some(*root),
        Command::Vectorize { strata: Some(s) } => {
            cfg.strata = s.parse::<StrataConfig>().map_err(|e| invalid(e.to_string()))?;
        }
        _ => {}
    }
    let out_dir = cfg.output.dir.clone();
    let mut p = Pipeline::new(cfg)?;

    match cli.command {
        Command::BuildIndex => {
            let index = p.index()?;
            let baseline = p.baseline_vectors()?;
            println!("{} concepts, {} terms", index.n_concepts(), index.vocabulary().len());
            if !index.zero_pages().is_empty() {
                println!("{} pages have no indexed term", index.zero_pages().len());
            }
            write_file(&out_dir.join("concepts.tsv"), |o| write_concepts(o, &index))?;
            write_vectors(&out_dir.join("baseline.esav"), &baseline)?;
        }
        Command::Relate { term_a, term_b } => {
            let index = p.index()?;
            let id = |raw: &str| -> Result<u32> {
                let tokens = p.analyzer().analyze(raw);
                let [term] = tokens.as_slice() else {
                    return Err(invalid(format!("`{raw}` does not analyze to a single term: {tokens:?}")));
                };
                index.term_id(term).map_err(|e| invalid(format!("`{raw}`: {e}")))
            };
            let (a, b) = (id(&term_a)?, id(&term_b)?);
            println!("{}", index.relatedness(a, b)?);
        }
        Command::BuildCatvecs => {
            let catvecs = p.category_vectors()?;
            let weights = p.weighted_edges()?;
            println!("{} category vectors, {} weighted edges", catvecs.category_ids().len(), weights.len());
            write_file(&out_dir.join("categories.tsv"), |o| write_category_rows(o, &catvecs))?;
            write_vectors(&out_dir.join("category_vectors.esav"), &category_vector_list(&catvecs))?;
            write_file(&out_dir.join("weighted_edges.tsv"), |o| write_weighted_edges(o, &weights))?;
        }
        Command::Diagnose { what } => {
            let (graph, _) = p.graph()?;
            let stdout = io::stdout();
            let mut out = stdout.lock();
            match what {
                Diagnose::Cycles => cycle_census(&graph, CensusMode::Exact).write_tsv(&mut out)?,
                Diagnose::Walk { seed } => cycle_census(&graph, CensusMode::Walk { seed }).write_tsv(&mut out)?,
                Diagnose::Degrees => degree_stats(&graph, FitWindow::default()).write_tsv(&mut out)?,
            }
        }
        Command::Arborify { .. } => {
            let arbor = p.arborescence()?;
            println!("root {}, {} nodes, total cost {:.6}", arbor.root(), arbor.len(), arbor.total_cost());
            write_file(&out_dir.join("arborescence.tsv"), |o| arbor.write_tsv(o))?;
        }
        Command::Vectorize { .. } => {
            let baseline = p.baseline_vectors()?;
            let stratified = p.stratified_vectors()?;
            println!("{} documents, strata weights {}", stratified.len(), p.config().strata);
            write_vectors(&out_dir.join("baseline.esav"), &baseline)?;
            write_vectors(&out_dir.join("stratified.esav"), &stratified)?;
        }
        Command::Run => {
            let outcome = p.run()?;
            for s in &outcome.stages {
                let what = match s.outcome {
                    StageOutcome::Hit => "cached",
                    StageOutcome::Computed => "computed",
                    StageOutcome::Skipped => "skipped",
                };
                println!("{:<22}{what}", s.stage);
            }
            match &outcome.evaluation {
                Some(ev) => print!("{}", ev.summary()),
                None => println!("no eval.labels configured; evaluation skipped"),
            }
            println!("outputs in {}", out_dir.display());
        }
        Command::Evaluate { mode } => {
            if p.config().eval.labels.is_none() {
                return Err(invalid("eval.labels is not set"));
            }
            let ev = p.evaluation()?.expect("labels are configured");
            let (report, name) = match mode {
                Mode::Baseline => (&ev.baseline, "eval_baseline.tsv"),
                Mode::Stratified => (&ev.stratified, "eval_stratified.tsv"),
            };
            print!("{}", report.summary());
            write_file(&out_dir.join(name), |o| report.write_tsv(o))?;
        }
        Command::Synth { .. } => unreachable!("handled above"),
    }
    Ok(())
}

fn synth(dir: &Path, seed: u64, topics: usize, pages_per_topic: usize) -> Result<()> {
    if topics < 2 || pages_per_topic < 10 {
        return Err(invalid("synth needs at least 2 topics of 10 pages for tenfold evaluation"));
    }
    let gen = SyntheticConfig { n_topics: topics, pages_per_topic, ..SyntheticConfig::planted_topics(seed) };
    let wiki = gen.generate();
    write_file(&dir.join("wiki.jsonl"), |o| write_corpus(&wiki.store, o))?;
    let labels = LabeledCorpus::new(wiki.labels.clone())?;
    write_file(&dir.join("labels.tsv"), |o| write_labels(o, &labels))?;

    let mut cfg = PipelineConfig::default();
    cfg.corpus.path = "wiki.jsonl".into();
    cfg.eval.labels = Some("labels.tsv".into());
    cfg.filter.min_distinct_terms = 1;
    cfg.filter.min_in_links = 0;
    cfg.filter.min_out_links = 0;
    cfg.vocab.min_df = 2;
    let text =
        format!("# Planted-topic corpus: {topics} topics x {pages_per_topic} pages, seed {seed}.\n{}", cfg.to_toml());
    write_file(&dir.join("wikistrata.toml"), |o| o.write_all(text.as_bytes()))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<PipelineError>().map_or(3, |p| p.exit_code());
            ExitCode::from(code as u8)
        }
    }
}
