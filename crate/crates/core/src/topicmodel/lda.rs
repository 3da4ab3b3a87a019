use log::warn;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{chain_rng, doc_distribution, sample_index, Algorithm, CountTables, ModelConfig, ModelError, TopicModel};
use crate::textprep::Corpus;

/// Collapsed Gibbs sampler state for LDA.
pub struct LdaSampler {
    config: ModelConfig,
    terms: Vec<String>,
    k: usize,
    v: usize,
    docs: Vec<Vec<usize>>,
    z: Vec<Vec<usize>>,
    nkw: Vec<u32>,
    nk: Vec<u32>,
    ndk: Vec<u32>,
    rng: ChaCha8Rng,
    weights: Vec<f64>,
}

impl LdaSampler {
    /// Random uniform initialisation of every token's topic.
    pub fn new(corpus: &Corpus, config: &ModelConfig) -> Result<Self, ModelError> {
        config.expect(Algorithm::Lda)?;
        if corpus.total_tokens() == 0 {
            return Err(ModelError::NoTokens);
        }
        let k = config.k;
        let v = corpus.vocab.len();
        if k > v {
            warn!("K = {k} exceeds the vocabulary size {v}");
        }
        let mut rng = chain_rng(config.seed, k);
        let docs: Vec<Vec<usize>> = corpus.docs.iter().map(|d| d.word_ids.clone()).collect();
        let mut nkw = vec![0u32; k * v];
        let mut nk = vec![0u32; k];
        let mut ndk = vec![0u32; docs.len() * k];
        let z = docs
            .iter()
            .enumerate()
            .map(|(d, words)| {
                words
                    .iter()
                    .map(|&w| {
                        let t = rng.gen_range(0..k);
                        nkw[t * v + w] += 1;
                        nk[t] += 1;
                        ndk[d * k + t] += 1;
                        t
                    })
                    .collect()
            })
            .collect();
        Ok(LdaSampler {
            config: config.clone(),
            terms: corpus.vocab.terms().to_vec(),
            k,
            v,
            docs,
            z,
            nkw,
            nk,
            ndk,
            rng,
            weights: vec![0.0; k],
        })
    }

    fn remove(&mut self, d: usize, i: usize) {
        let (w, t) = (self.docs[d][i], self.z[d][i]);
        self.nkw[t * self.v + w] -= 1;
        self.nk[t] -= 1;
        self.ndk[d * self.k + t] -= 1;
    }

    fn add(&mut self, d: usize, i: usize, t: usize) {
        let w = self.docs[d][i];
        self.z[d][i] = t;
        self.nkw[t * self.v + w] += 1;
        self.nk[t] += 1;
        self.ndk[d * self.k + t] += 1;
    }

    /// Unnormalized `(n_wk + beta) / (n_k + V beta) * (n_dk + alpha)` for
    /// word `w` in document `d`, with the token already removed.
    fn fill_weights(&mut self, d: usize, w: usize) {
        let (alpha, beta) = (self.config.alpha, self.config.beta);
        let vbeta = self.v as f64 * beta;
        for t in 0..self.k {
            self.weights[t] = (self.nkw[t * self.v + w] as f64 + beta) / (self.nk[t] as f64 + vbeta)
                * (self.ndk[d * self.k + t] as f64 + alpha);
        }
    }

    /// Normalized full conditional of token `i` in document `d` given every
    /// other assignment. The state is left unchanged.
    pub fn token_conditional(&mut self, d: usize, i: usize) -> Vec<f64> {
        let t = self.z[d][i];
        self.remove(d, i);
        self.fill_weights(d, self.docs[d][i]);
        self.add(d, i, t);
        let total: f64 = self.weights.iter().sum();
        self.weights.iter().map(|w| w / total).collect()
    }

    pub fn sweep(&mut self) {
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                self.remove(d, i);
                self.fill_weights(d, self.docs[d][i]);
                let t = sample_index(&self.weights, &mut self.rng);
                self.add(d, i, t);
            }
        }
    }

    pub fn assignments(&self) -> &[Vec<usize>] {
        &self.z
    }

    /// Row-major `k x v` token counts.
    pub fn topic_word_counts(&self) -> &[u32] {
        &self.nkw
    }

    pub fn into_model(self) -> TopicModel {
        let (k, v, beta) = (self.k, self.v, self.config.beta);
        let phi = (0..k)
            .map(|t| {
                let denom = self.nk[t] as f64 + v as f64 * beta;
                (0..v).map(|w| (self.nkw[t * v + w] as f64 + beta) / denom).collect()
            })
            .collect();
        let doc_topic_dist = self
            .z
            .iter()
            .map(|z| doc_distribution(z, k, self.config.alpha))
            .collect();
        TopicModel {
            config: self.config,
            terms: self.terms,
            phi,
            doc_topic_dist,
            word_assignments: self.z,
            doc_topic_sets: None,
            counts: CountTables {
                k,
                v,
                topic_word: self.nkw,
                promotions: Vec::new(),
            },
        }
    }
}

/// Fits LDA for `config.iterations` sweeps; estimates come from the final
/// state.
pub fn fit_lda(corpus: &Corpus, config: &ModelConfig) -> Result<TopicModel, ModelError> {
    let mut sampler = LdaSampler::new(corpus, config)?;
    for _ in 0..config.iterations {
        sampler.sweep();
    }
    Ok(sampler.into_model())
}
