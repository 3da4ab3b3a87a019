use log::warn;
use rand::seq::index::sample as sample_distinct;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{chain_rng, doc_distribution, sample_index, Algorithm, CountTables, ModelConfig, ModelError, TopicModel};
use crate::embeddings::{similar_terms, EmbeddingStore};
use crate::textprep::Corpus;

/// Count totals used to check conservation of the sampler state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UrnTotals {
    /// Sum of raw topic-word counts.
    pub raw: u64,
    /// Number of tokens in the corpus.
    pub tokens: u64,
    /// Sum of promotion counts.
    pub promotions: u64,
    /// Sum over tokens of the number of similar words of the token's term.
    pub expected_promotions: u64,
}

impl UrnTotals {
    pub fn conserved(&self) -> bool {
        self.raw == self.tokens && self.promotions == self.expected_promotions
    }
}

/// Collapsed Gibbs sampler for PDMM with optional generalized Pólya urn.
///
/// Each non-empty document owns a topic subset `Z_d` with
/// `1 <= |Z_d| <= max_topics_per_doc`, drawn under a truncated Poisson prior
/// on its size; every token takes a topic from `Z_d`. Adding a token of term
/// `w` to topic `t` promotes every term similar to `w` in `t` by
/// `promotion_weight`; removing the token withdraws exactly those
/// promotions.
pub struct PdmmSampler {
    config: ModelConfig,
    terms: Vec<String>,
    k: usize,
    v: usize,
    max_t: usize,
    docs: Vec<Vec<usize>>,
    z: Vec<Vec<usize>>,
    sets: Vec<Vec<usize>>,
    /// documents whose subset contains each topic
    mk: Vec<u32>,
    nkw: Vec<u32>,
    nk: Vec<u64>,
    pkw: Vec<u32>,
    pk: Vec<u64>,
    neighbors: Vec<Vec<usize>>,
    active_docs: usize,
    /// `ln(lambda^t / t!)` indexed by subset size
    log_size_prior: Vec<f64>,
    rng: ChaCha8Rng,
}

impl PdmmSampler {
    /// Sampler with urn promotions along `store`; `None` disables the urn.
    pub fn new(corpus: &Corpus, config: &ModelConfig, store: Option<&EmbeddingStore>) -> Result<Self, ModelError> {
        config.expect(Algorithm::GpuPdmm)?;
        let neighbors = match store {
            Some(store) => urn_neighbors(corpus, config, store)?,
            None => vec![Vec::new(); corpus.vocab.len()],
        };
        Self::with_neighbors(corpus, config, neighbors)
    }

    pub(super) fn with_neighbors(corpus: &Corpus, config: &ModelConfig, neighbors: Vec<Vec<usize>>) -> Result<Self, ModelError> {
        if corpus.total_tokens() == 0 {
            return Err(ModelError::NoTokens);
        }
        let k = config.k;
        let v = corpus.vocab.len();
        if k > v {
            warn!("K = {k} exceeds the vocabulary size {v}");
        }
        let max_t = config.gpu.max_topics_per_doc.min(k);
        let lambda = config.gpu.lambda;
        let mut log_size_prior = vec![f64::NEG_INFINITY; max_t + 1];
        let mut log_fact = 0.0;
        for t in 1..=max_t {
            log_fact += (t as f64).ln();
            log_size_prior[t] = t as f64 * lambda.ln() - log_fact;
        }
        let docs: Vec<Vec<usize>> = corpus.docs.iter().map(|d| d.word_ids.clone()).collect();
        let active_docs = docs.iter().filter(|d| !d.is_empty()).count();
        let mut sampler = PdmmSampler {
            config: config.clone(),
            terms: corpus.vocab.terms().to_vec(),
            k,
            v,
            max_t,
            z: docs.iter().map(|d| vec![0; d.len()]).collect(),
            sets: vec![Vec::new(); docs.len()],
            docs,
            mk: vec![0; k],
            nkw: vec![0; k * v],
            nk: vec![0; k],
            pkw: vec![0; k * v],
            pk: vec![0; k],
            neighbors,
            active_docs,
            log_size_prior,
            rng: chain_rng(config.seed, k),
        };
        sampler.initialise();
        Ok(sampler)
    }

    fn initialise(&mut self) {
        let size_weights: Vec<f64> = self.log_size_prior[1..].iter().map(|l| l.exp()).collect();
        for d in 0..self.docs.len() {
            if self.docs[d].is_empty() {
                continue;
            }
            let size = 1 + sample_index(&size_weights, &mut self.rng);
            let mut set = sample_distinct(&mut self.rng, self.k, size).into_vec();
            set.sort_unstable();
            for i in 0..self.docs[d].len() {
                let t = set[self.rng.gen_range(0..size)];
                self.z[d][i] = t;
                self.add_token(t, self.docs[d][i]);
            }
            for &t in &set {
                self.mk[t] += 1;
            }
            self.sets[d] = set;
        }
    }

    fn add_token(&mut self, t: usize, w: usize) {
        self.nkw[t * self.v + w] += 1;
        self.nk[t] += 1;
        for &u in &self.neighbors[w] {
            self.pkw[t * self.v + u] += 1;
        }
        self.pk[t] += self.neighbors[w].len() as u64;
    }

    fn remove_token(&mut self, t: usize, w: usize) {
        self.nkw[t * self.v + w] -= 1;
        self.nk[t] -= 1;
        for &u in &self.neighbors[w] {
            self.pkw[t * self.v + u] -= 1;
        }
        self.pk[t] -= self.neighbors[w].len() as u64;
    }

    fn phi_hat(&self, t: usize, w: usize) -> f64 {
        let mu = self.config.gpu.promotion_weight;
        let beta = self.config.beta;
        let nkw = self.nkw[t * self.v + w] as f64 + mu * self.pkw[t * self.v + w] as f64;
        let nk = self.nk[t] as f64 + mu * self.pk[t] as f64;
        (nkw + beta) / (nk + self.v as f64 * beta)
    }

    fn candidates(&self, d: usize) -> Vec<usize> {
        let limit = self.config.gpu.search_top_k;
        if self.k <= limit {
            return (0..self.k).collect();
        }
        let alpha = self.config.alpha;
        let mut scored: Vec<(f64, usize)> = (0..self.k)
            .map(|t| {
                let like: f64 = self.docs[d].iter().map(|&w| self.phi_hat(t, w).ln()).sum();
                ((self.mk[t] as f64 + alpha).ln() + like, t)
            })
            .collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut top: Vec<usize> = scored.into_iter().take(limit).map(|(_, t)| t).collect();
        top.sort_unstable();
        top
    }

    fn sample_doc(&mut self, d: usize) {
        let n = self.docs[d].len();
        for i in 0..n {
            self.remove_token(self.z[d][i], self.docs[d][i]);
        }
        for &t in &self.sets[d] {
            self.mk[t] -= 1;
        }

        let cand = self.candidates(d);
        let like: Vec<Vec<f64>> = cand
            .iter()
            .map(|&t| self.docs[d].iter().map(|&w| self.phi_hat(t, w)).collect())
            .collect();
        let alpha = self.config.alpha;
        let log_topic: Vec<f64> = cand.iter().map(|&t| (self.mk[t] as f64 + alpha).ln()).collect();
        let log_norm = ((self.active_docs - 1) as f64 + self.k as f64 * alpha).ln();

        let mut subsets: Vec<Vec<usize>> = Vec::new();
        let mut log_weights: Vec<f64> = Vec::new();
        let max_size = self.max_t.min(cand.len());
        let mut mix = vec![0.0; n];
        let mut stack: Vec<usize> = Vec::with_capacity(max_size);
        enumerate_subsets(cand.len(), max_size, &mut stack, &mut |members: &[usize]| {
            let size = members.len();
            mix.iter_mut().for_each(|m| *m = 0.0);
            let mut lw = self.log_size_prior[size] - size as f64 * log_norm - n as f64 * (size as f64).ln();
            for &c in members {
                lw += log_topic[c];
                for (m, p) in mix.iter_mut().zip(&like[c]) {
                    *m += p;
                }
            }
            lw += mix.iter().map(|m| m.ln()).sum::<f64>();
            subsets.push(members.iter().map(|&c| cand[c]).collect());
            log_weights.push(lw);
        });
        let max_lw = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = log_weights.iter().map(|lw| (lw - max_lw).exp()).collect();
        let set = subsets.swap_remove(sample_index(&weights, &mut self.rng));

        let mut token_weights = vec![0.0; set.len()];
        for i in 0..n {
            let w = self.docs[d][i];
            for (slot, &t) in token_weights.iter_mut().zip(&set) {
                *slot = self.phi_hat(t, w);
            }
            let t = set[sample_index(&token_weights, &mut self.rng)];
            self.z[d][i] = t;
            self.add_token(t, w);
        }
        for &t in &set {
            self.mk[t] += 1;
        }
        self.sets[d] = set;
    }

    pub fn sweep(&mut self) {
        for d in 0..self.docs.len() {
            if !self.docs[d].is_empty() {
                self.sample_doc(d);
            }
        }
    }

    pub fn assignments(&self) -> &[Vec<usize>] {
        &self.z
    }

    pub fn topic_sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn totals(&self) -> UrnTotals {
        let tokens = self.docs.iter().map(|d| d.len() as u64).sum();
        let expected_promotions = self
            .docs
            .iter()
            .flatten()
            .map(|&w| self.neighbors[w].len() as u64)
            .sum();
        UrnTotals {
            raw: self.nkw.iter().map(|&c| c as u64).sum(),
            tokens,
            promotions: self.pkw.iter().map(|&c| c as u64).sum(),
            expected_promotions,
        }
    }

    pub fn into_model(self) -> TopicModel {
        let phi = (0..self.k)
            .map(|t| (0..self.v).map(|w| self.phi_hat(t, w)).collect())
            .collect();
        let doc_topic_dist = self
            .z
            .iter()
            .map(|z| doc_distribution(z, self.k, self.config.alpha))
            .collect();
        TopicModel {
            phi,
            doc_topic_dist,
            word_assignments: self.z,
            doc_topic_sets: Some(self.sets),
            counts: CountTables {
                k: self.k,
                v: self.v,
                topic_word: self.nkw,
                promotions: self.pkw,
            },
            config: self.config,
            terms: self.terms,
        }
    }
}

/// Similar-term lists for the urn, with the coverage checks applied.
pub(super) fn urn_neighbors(
    corpus: &Corpus,
    config: &ModelConfig,
    store: &EmbeddingStore,
) -> Result<Vec<Vec<usize>>, ModelError> {
    let (lists, coverage) = similar_terms(corpus.vocab.terms(), store, config.gpu.similarity_threshold);
    if coverage == 0.0 {
        return Err(ModelError::NoEmbeddingCoverage);
    }
    if coverage < 0.5 {
        warn!("word vectors cover only {:.1}% of the vocabulary", 100.0 * coverage);
    }
    Ok(lists)
}

/// Calls `visit` with every non-empty subset (ascending indices) of
/// `0..n` with at most `max_size` members.
fn enumerate_subsets(n: usize, max_size: usize, stack: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    let start = stack.last().map_or(0, |&l| l + 1);
    for i in start..n {
        stack.push(i);
        visit(stack);
        if stack.len() < max_size {
            enumerate_subsets(n, max_size, stack, visit);
        }
        stack.pop();
    }
}

/// Fits GPU-PDMM with urn promotions derived from `store`.
pub fn fit_gpu_pdmm(corpus: &Corpus, config: &ModelConfig, store: &EmbeddingStore) -> Result<TopicModel, ModelError> {
    run(PdmmSampler::new(corpus, config, Some(store))?, config.iterations)
}

/// Plain PDMM: the GPU-PDMM sampler without urn promotions.
pub fn fit_pdmm(corpus: &Corpus, config: &ModelConfig) -> Result<TopicModel, ModelError> {
    run(PdmmSampler::new(corpus, config, None)?, config.iterations)
}

fn run(mut sampler: PdmmSampler, iterations: usize) -> Result<TopicModel, ModelError> {
    for _ in 0..iterations {
        sampler.sweep();
    }
    Ok(sampler.into_model())
}
