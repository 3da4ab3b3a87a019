//! Short-text topic models fitted by collapsed Gibbs sampling.
//!
//! Two samplers are provided: classic LDA ([`fit_lda`]) and GPU-PDMM
//! ([`fit_gpu_pdmm`]), a Poisson-based Dirichlet multinomial mixture where
//! every document draws a small topic subset and a generalized Pólya urn
//! promotes embedding-similar words. [`coherence`] scores fitted models and
//! [`sweep_select`] picks the topic count with the best score.

mod coherence;
mod lda;
mod pdmm;
mod persist;
mod sweep;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embeddings::EmbeddingError;

pub use coherence::{coherence, npmi, CoherenceReport};
pub use lda::{fit_lda, LdaSampler};
pub use pdmm::{fit_gpu_pdmm, fit_pdmm, PdmmSampler, UrnTotals};
pub use persist::{load_model, save_model, PersistError, TOP_WORDS_SAVED};
pub use sweep::{select_best, sweep_select, SweepOutcome, SweepScore, SCORE_TOLERANCE};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
    #[error("corpus has no tokens; every document is empty")]
    NoTokens,
    #[error("configuration is for {found:?}, expected {expected:?}")]
    WrongAlgorithm { expected: Algorithm, found: Algorithm },
    #[error("no vocabulary term has a word vector")]
    NoEmbeddingCoverage,
    #[error("empty topic-count range")]
    EmptyRange,
    #[error("GPU-PDMM needs word embeddings")]
    MissingEmbeddings,
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "lda")]
    Lda,
    #[serde(rename = "gpu-pdmm")]
    GpuPdmm,
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "lda" => Ok(Algorithm::Lda),
            "gpu-pdmm" | "gpupdmm" => Ok(Algorithm::GpuPdmm),
            other => Err(format!("unknown algorithm `{other}` (expected lda or gpu-pdmm)")),
        }
    }
}

impl Algorithm {
    /// Sweep count used by default for this sampler.
    pub fn default_iterations(self) -> usize {
        match self {
            Algorithm::Lda => 1000,
            Algorithm::GpuPdmm => 48,
        }
    }
}

/// GPU-PDMM specific parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpuParams {
    /// Poisson rate for the number of topics per document.
    pub lambda: f64,
    pub max_topics_per_doc: usize,
    /// Minimum cosine similarity for an urn promotion.
    pub similarity_threshold: f64,
    /// Count added to each similar word on promotion.
    pub promotion_weight: f64,
    /// Topic subsets are enumerated over the this many most likely topics
    /// per document; exact when `K` does not exceed it.
    pub search_top_k: usize,
}

impl Default for GpuParams {
    fn default() -> Self {
        GpuParams {
            lambda: 1.5,
            max_topics_per_doc: 3,
            similarity_threshold: 0.7,
            promotion_weight: 0.3,
            search_top_k: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub algorithm: Algorithm,
    pub k: usize,
    pub iterations: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    #[serde(default)]
    pub gpu: GpuParams,
}

impl ModelConfig {
    pub fn new(algorithm: Algorithm, k: usize) -> Self {
        ModelConfig {
            algorithm,
            k,
            iterations: algorithm.default_iterations(),
            alpha: 0.1,
            beta: 0.01,
            seed: 0,
            gpu: GpuParams::default(),
        }
    }

    pub fn lda(k: usize) -> Self {
        Self::new(Algorithm::Lda, k)
    }

    pub fn gpu_pdmm(k: usize) -> Self {
        Self::new(Algorithm::GpuPdmm, k)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        if self.k < 1 {
            return bad("k must be at least 1");
        }
        if self.iterations < 1 {
            return bad("iterations must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be positive");
        }
        if self.algorithm == Algorithm::GpuPdmm {
            let g = &self.gpu;
            if !(g.lambda > 0.0) {
                return bad("lambda must be positive");
            }
            if g.max_topics_per_doc < 1 {
                return bad("max_topics_per_doc must be at least 1");
            }
            if !(g.promotion_weight >= 0.0) {
                return bad("promotion_weight must be non-negative");
            }
            if g.search_top_k < 1 {
                return bad("search_top_k must be at least 1");
            }
        }
        Ok(())
    }

    fn expect(&self, algorithm: Algorithm) -> Result<(), ModelError> {
        if self.algorithm != algorithm {
            return Err(ModelError::WrongAlgorithm {
                expected: algorithm,
                found: self.algorithm,
            });
        }
        self.validate()
    }
}

/// Raw sampler counts at the final state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountTables {
    pub k: usize,
    pub v: usize,
    /// Row-major `k x v` token counts.
    pub topic_word: Vec<u32>,
    /// Row-major `k x v` urn promotion counts (each worth
    /// `promotion_weight`); empty for LDA.
    pub promotions: Vec<u32>,
}

/// A fitted topic model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub config: ModelConfig,
    pub terms: Vec<String>,
    /// `k x v` topic-word probabilities.
    pub phi: Vec<Vec<f64>>,
    /// Per-document distribution over the `k` topics.
    pub doc_topic_dist: Vec<Vec<f64>>,
    /// Per-document, per-token topic ids.
    pub word_assignments: Vec<Vec<usize>>,
    /// GPU-PDMM topic subsets per document (empty for empty documents).
    pub doc_topic_sets: Option<Vec<Vec<usize>>>,
    pub counts: CountTables,
}

impl TopicModel {
    pub fn k(&self) -> usize {
        self.config.k
    }

    /// Term ids of the `n` most probable words per topic (ties to the lower id).
    pub fn top_word_ids(&self, n: usize) -> Vec<Vec<usize>> {
        self.phi
            .iter()
            .map(|row| {
                let mut ids: Vec<usize> = (0..row.len()).collect();
                ids.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
                ids.truncate(n);
                ids
            })
            .collect()
    }

    pub fn top_words(&self, n: usize) -> Vec<Vec<String>> {
        self.top_word_ids(n)
            .into_iter()
            .map(|ids| ids.into_iter().map(|i| self.terms[i].clone()).collect())
            .collect()
    }
}

/// Chain RNG for a given seed and topic count; different `k` get
/// independent streams.
pub(crate) fn chain_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

/// Draws an index proportionally to non-negative `weights`.
pub(crate) fn sample_index<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return i;
        }
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

/// `(n_dk + alpha) / (N_d + K alpha)` from per-token assignments.
pub(crate) fn doc_distribution(assignments: &[usize], k: usize, alpha: f64) -> Vec<f64> {
    let mut counts = vec![0.0; k];
    for &z in assignments {
        counts[z] += 1.0;
    }
    let denom = assignments.len() as f64 + k as f64 * alpha;
    counts.iter().map(|c| (c + alpha) / denom).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_parameter_table() {
        let lda = ModelConfig::lda(10);
        assert_eq!((lda.iterations, lda.alpha, lda.beta), (1000, 0.1, 0.01));
        let gpu = ModelConfig::gpu_pdmm(10);
        assert_eq!((gpu.iterations, gpu.alpha, gpu.beta), (48, 0.1, 0.01));
        assert!(lda.validate().is_ok());
        assert!(gpu.validate().is_ok());
    }

    #[test]
    fn invalid_configs() {
        assert!(ModelConfig::lda(0).validate().is_err());
        assert!(ModelConfig::lda(2).with_iterations(0).validate().is_err());
        let mut c = ModelConfig::lda(2);
        c.alpha = 0.0;
        assert!(c.validate().is_err());
        let mut g = ModelConfig::gpu_pdmm(2);
        g.gpu.max_topics_per_doc = 0;
        assert!(g.validate().is_err());
    }

    #[test]
    fn algorithm_names() {
        assert_eq!("gpu-pdmm".parse::<Algorithm>().unwrap(), Algorithm::GpuPdmm);
        assert_eq!("LDA".parse::<Algorithm>().unwrap(), Algorithm::Lda);
        assert!("nmf".parse::<Algorithm>().is_err());
    }

    #[test]
    fn sample_index_skips_zero_weights() {
        let mut rng = chain_rng(1, 1);
        for _ in 0..100 {
            assert_eq!(sample_index(&[0.0, 1.0, 0.0], &mut rng), 1);
        }
    }
}
