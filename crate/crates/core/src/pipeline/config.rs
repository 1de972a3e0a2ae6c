use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::catgraph::CategoricalIdf;
use crate::corpus::FilterConfig;
use crate::exec::Exec;
use crate::strata::StrataConfig;
use crate::textproc::{load_stopwords, Analyzer, IdentityStemmer, PluralStemmer};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: CorpusSection,
    pub filter: FilterConfig,
    pub vocab: VocabSection,
    pub analyzer: AnalyzerSection,
    pub catvec: CatvecSection,
    pub arbor: ArborSection,
    pub strata: StrataConfig,
    pub eval: EvalSection,
    pub cache: CacheSection,
    pub output: OutputSection,
    pub exec: ExecSection,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabSection {
    pub min_df: u32,
}

impl Default for VocabSection {
    fn default() -> Self {
        VocabSection { min_df: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StemmerChoice {
    #[default]
    Plural,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzerSection {
    /// One stopword per line.
    pub stopwords: Option<PathBuf>,
    pub lowercase: bool,
    pub stemmer: StemmerChoice,
}

impl Default for AnalyzerSection {
    fn default() -> Self {
        AnalyzerSection { stopwords: None, lowercase: true, stemmer: StemmerChoice::Plural }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatvecSection {
    pub max_nnz: usize,
    pub idf: CategoricalIdf,
}

impl Default for CatvecSection {
    fn default() -> Self {
        CatvecSection { max_nnz: 1000, idf: CategoricalIdf::Prose }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArborSection {
    /// Root category id; the corpus root when absent.
    pub root: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub k: usize,
    pub seed: u64,
    /// `page_id\tclass` file; evaluation is skipped without it.
    pub labels: Option<PathBuf>,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection { k: 10, seed: 0, labels: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CacheSection {
    pub dir: PathBuf,
}

impl Default for CacheSection {
    fn default() -> Self {
        CacheSection { dir: PathBuf::from(".wikistrata-cache") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExecSection {
    pub parallel: bool,
}

impl Default for ExecSection {
    fn default() -> Self {
        ExecSection { parallel: true }
    }
}

impl PipelineConfig {
    /// Parses a TOML config; relative paths are taken against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, PipelineError> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    /// Reads a TOML config; relative paths are taken against the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        PipelineConfig::from_toml(&text, base)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus.path);
        fix(&mut self.cache.dir);
        fix(&mut self.output.dir);
        if let Some(p) = &mut self.analyzer.stopwords {
            fix(p);
        }
        if let Some(p) = &mut self.eval.labels {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let invalid = |m: String| Err(PipelineError::Validation(m));
        if self.corpus.path.as_os_str().is_empty() {
            return invalid("corpus.path is not set".into());
        }
        if self.catvec.max_nnz == 0 {
            return invalid("catvec.max_nnz must be at least 1".into());
        }
        if self.eval.k < 2 {
            return invalid(format!("eval.k must be at least 2, got {}", self.eval.k));
        }
        self.strata.validate().map_err(|e| PipelineError::Validation(e.to_string()))
    }

    pub fn exec(&self) -> Exec {
        if self.exec.parallel {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }

    pub fn analyzer(&self) -> Result<Analyzer, PipelineError> {
        let stopwords = match &self.analyzer.stopwords {
            Some(p) => load_stopwords(p)
                .map_err(|e| PipelineError::Validation(format!("cannot read stopwords {}: {e}", p.display())))?,
            None => Vec::new(),
        };
        let stemmer: Arc<dyn crate::textproc::Stemmer> = match self.analyzer.stemmer {
            StemmerChoice::Plural => Arc::new(PluralStemmer),
            StemmerChoice::Identity => Arc::new(IdentityStemmer),
        };
        Ok(Analyzer::new(stopwords, stemmer, self.analyzer.lowercase))
    }
}
