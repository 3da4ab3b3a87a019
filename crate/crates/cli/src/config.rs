//! The TOML configuration file. Every section and key is optional; missing
//! values take the defaults below. Unknown keys are rejected so typos fail
//! loudly instead of silently running with defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use newsdiv::report::DegeneratePolicy;
use newsdiv::topicmodel::{Algorithm, GpuParams, ModelConfig};
use newsdiv::Strategy;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub ingest: IngestSection,
    pub textprep: TextprepSection,
    pub model: ModelSection,
    pub sweep: SweepSection,
    pub assign: AssignSection,
    pub embed: EmbedSection,
    pub diversity: DiversitySection,
    pub report: ReportSection,
    pub pipeline: PipelineSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestSection {
    /// Crawl result file of the primary dataset.
    pub input: Option<PathBuf>,
    /// `query<TAB>category` lines.
    pub categories: Option<PathBuf>,
    pub delimiter: char,
    /// Label of the primary dataset in the overlap table.
    pub name: String,
    /// Further crawls, by name, used only for the overlap table.
    pub controls: BTreeMap<String, PathBuf>,
}

impl Default for IngestSection {
    fn default() -> Self {
        IngestSection {
            input: None,
            categories: None,
            delimiter: ',',
            name: "Top Stories".into(),
            controls: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextprepSection {
    pub min_count: usize,
    /// Replaces the bundled stopword list.
    pub stopwords: Option<PathBuf>,
    /// `form<TAB>lemma` lines.
    pub lemmas: Option<PathBuf>,
}

impl Default for TextprepSection {
    fn default() -> Self {
        TextprepSection {
            min_count: 3,
            stopwords: None,
            lemmas: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub algorithm: Algorithm,
    pub k: usize,
    /// Defaults to 1000 sweeps for LDA and 48 for GPU-PDMM.
    pub iterations: Option<usize>,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub gpu: GpuParams,
}

impl Default for ModelSection {
    fn default() -> Self {
        let base = ModelConfig::gpu_pdmm(10);
        ModelSection {
            algorithm: base.algorithm,
            k: base.k,
            iterations: None,
            alpha: base.alpha,
            beta: base.beta,
            seed: base.seed,
            gpu: base.gpu,
        }
    }
}

impl ModelSection {
    pub fn model_config(&self, k: usize) -> ModelConfig {
        ModelConfig {
            algorithm: self.algorithm,
            k,
            iterations: self.iterations.unwrap_or(self.algorithm.default_iterations()),
            alpha: self.alpha,
            beta: self.beta,
            seed: self.seed,
            gpu: self.gpu,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub k_min: usize,
    pub k_max: usize,
    /// Words per topic scored for coherence.
    pub top_n: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            k_min: 3,
            k_max: 50,
            top_n: 10,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssignSection {
    pub strategy: Strategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedSection {
    /// Word vectors in word2vec text format. Required by GPU-PDMM and by
    /// the disparity metrics.
    pub vectors: Option<PathBuf>,
    /// Top words averaged into each topic embedding.
    pub top_n: usize,
}

impl Default for EmbedSection {
    fn default() -> Self {
        EmbedSection { vectors: None, top_n: 10 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Denominator {
    #[default]
    TopicsPresent,
    ModelTopics,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiversitySection {
    pub denominator: Denominator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub top_n: usize,
    /// Aggregate degenerate values as this constant instead of dropping
    /// them.
    pub map_degenerate_to: Option<f64>,
    pub include_empty: bool,
    /// Topics left out of the cleaned balance table.
    pub excluded_topics: Vec<usize>,
}

impl Default for ReportSection {
    fn default() -> Self {
        ReportSection {
            top_n: 10,
            map_degenerate_to: None,
            include_empty: false,
            excluded_topics: Vec::new(),
        }
    }
}

impl ReportSection {
    pub fn degenerate(&self) -> DegeneratePolicy {
        self.map_degenerate_to.map_or(DegeneratePolicy::Exclude, DegeneratePolicy::MapTo)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelStage {
    Fit,
    #[default]
    Sweep,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    /// Which command `all` uses to produce the model.
    pub model_stage: ModelStage,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> anyhow::Result<Config> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
        Config::parse(&text).map_err(|e| anyhow::anyhow!("invalid config {}: {e}", path.display()))
    }
}
