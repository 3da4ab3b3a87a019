use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pdmm::{urn_neighbors, PdmmSampler};
use super::{coherence, fit_lda, Algorithm, ModelConfig, ModelError, TopicModel};
use crate::embeddings::EmbeddingStore;
use crate::textprep::Corpus;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepScore {
    pub k: usize,
    pub coherence: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub model: TopicModel,
    pub selected_k: usize,
    /// One score per fitted K, ascending.
    pub scores: Vec<SweepScore>,
}

/// Scores closer than this count as equal. Models that recover the same
/// topics can differ in the last bits of their mean.
pub const SCORE_TOLERANCE: f64 = 1e-9;

/// The K with the highest coherence; equal scores go to the smaller K.
/// Unscored entries never win.
pub fn select_best(scores: &[SweepScore]) -> Option<usize> {
    let mut sorted: Vec<(usize, f64)> = scores.iter().filter_map(|s| s.coherence.map(|c| (s.k, c))).collect();
    sorted.sort_by_key(|s| s.0);
    let mut best: Option<(usize, f64)> = None;
    for (k, c) in sorted {
        if best.map_or(true, |(_, b)| c > b + SCORE_TOLERANCE) {
            best = Some((k, c));
        }
    }
    best.map(|s| s.0)
}

/// Fits one model per K in `ks` (chains run in parallel, at most `jobs` at a
/// time), scores each by mean NPMI over the `top_n` words and returns the
/// best model with the full score table.
pub fn sweep_select(
    corpus: &Corpus,
    base: &ModelConfig,
    ks: &[usize],
    embeddings: Option<&EmbeddingStore>,
    top_n: usize,
    jobs: Option<usize>,
) -> Result<SweepOutcome, ModelError> {
    if ks.is_empty() {
        return Err(ModelError::EmptyRange);
    }
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    for &k in &ks {
        ModelConfig { k, ..base.clone() }.validate()?;
    }

    // urn neighbourhoods depend on the vocabulary only, build them once
    let prepared = match base.algorithm {
        Algorithm::Lda => None,
        Algorithm::GpuPdmm => {
            let store = embeddings.ok_or(ModelError::MissingEmbeddings)?;
            Some(urn_neighbors(corpus, base, store)?)
        }
    };

    let fit_one = |k: usize| -> Result<(TopicModel, SweepScore), ModelError> {
        let config = ModelConfig { k, ..base.clone() };
        let model = match &prepared {
            None => fit_lda(corpus, &config)?,
            Some(neighbors) => {
                let mut sampler = PdmmSampler::with_neighbors(corpus, &config, neighbors.clone())?;
                for _ in 0..config.iterations {
                    sampler.sweep();
                }
                sampler.into_model()
            }
        };
        let score = coherence(&model, corpus, top_n).mean;
        info!("K = {k}: coherence {score:?}");
        Ok((model, SweepScore { k, coherence: score }))
    };

    let run = || ks.par_iter().map(|&k| fit_one(k)).collect::<Result<Vec<_>, _>>();
    let results = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| ModelError::InvalidConfig(e.to_string()))?
            .install(run)?,
        None => run()?,
    };

    let scores: Vec<SweepScore> = results.iter().map(|(_, s)| *s).collect();
    // with no scorable model at all, fall back to the smallest K
    let selected_k = select_best(&scores).unwrap_or(ks[0]);
    let model = results
        .into_iter()
        .find(|(m, _)| m.k() == selected_k)
        .map(|(m, _)| m)
        .expect("selected K was fitted");
    Ok(SweepOutcome {
        model,
        selected_k,
        scores,
    })
}
