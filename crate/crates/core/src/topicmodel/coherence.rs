use serde::{Deserialize, Serialize};

use super::TopicModel;
use crate::textprep::Corpus;

/// Per-topic and mean NPMI coherence of a model's top words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub top_n: usize,
    /// Mean pairwise NPMI per topic; absent when no pair was scorable.
    pub per_topic: Vec<Option<f64>>,
    /// Mean over the topics that have a score.
    pub mean: Option<f64>,
    /// Word pairs skipped because a word occurs in no document.
    pub skipped_pairs: usize,
    /// Topics without a single token. Their top words are arbitrary, so
    /// they are left unscored.
    pub empty_topics: Vec<usize>,
}

/// NPMI from document counts, smoothed with one pseudo-document that
/// contains every word: `p = (count + 1) / (docs + 1)`.
pub fn npmi(df_a: usize, df_b: usize, df_ab: usize, docs: usize) -> f64 {
    let n = docs as f64 + 1.0;
    let pa = (df_a as f64 + 1.0) / n;
    let pb = (df_b as f64 + 1.0) / n;
    let pab = (df_ab as f64 + 1.0) / n;
    // words that always occur together score exactly 1
    if pab >= 1.0 || (df_a == df_ab && df_b == df_ab) {
        return 1.0;
    }
    ((pab / (pa * pb)).ln() / -pab.ln()).clamp(-1.0, 1.0)
}

/// Average pairwise NPMI of each topic's `top_n` words, using document-level
/// co-occurrence in `corpus`.
pub fn coherence(model: &TopicModel, corpus: &Corpus, top_n: usize) -> CoherenceReport {
    let v = corpus.vocab.len();
    let mut postings: Vec<Vec<usize>> = vec![Vec::new(); v];
    for (d, doc) in corpus.docs.iter().enumerate() {
        let mut ids = doc.word_ids.clone();
        ids.sort_unstable();
        ids.dedup();
        for id in ids {
            postings[id].push(d);
        }
    }
    let docs = corpus.docs.len();
    let mut skipped = 0;
    let counts = &model.counts;
    let empty_topics: Vec<usize> = if counts.topic_word.is_empty() {
        Vec::new()
    } else {
        (0..counts.k)
            .filter(|&t| counts.topic_word[t * counts.v..(t + 1) * counts.v].iter().all(|&c| c == 0))
            .collect()
    };
    let per_topic: Vec<Option<f64>> = model
        .top_word_ids(top_n)
        .iter()
        .enumerate()
        .map(|(topic, ids)| {
            if empty_topics.contains(&topic) {
                return None;
            }
            // score the word set in a fixed order so equal sets give equal scores
            let mut ids = ids.clone();
            ids.sort_unstable();
            let mut sum = 0.0;
            let mut pairs = 0usize;
            for (a_pos, &a) in ids.iter().enumerate() {
                for &b in &ids[a_pos + 1..] {
                    let (pa, pb) = (&postings[a], &postings[b]);
                    if pa.is_empty() || pb.is_empty() {
                        skipped += 1;
                        continue;
                    }
                    sum += npmi(pa.len(), pb.len(), intersection_len(pa, pb), docs);
                    pairs += 1;
                }
            }
            (pairs > 0).then(|| sum / pairs as f64)
        })
        .collect();
    let scored: Vec<f64> = per_topic.iter().flatten().copied().collect();
    let mean = (!scored.is_empty()).then(|| scored.iter().sum::<f64>() / scored.len() as f64);
    CoherenceReport {
        top_n,
        per_topic,
        mean,
        skipped_pairs: skipped,
        empty_topics,
    }
}

fn intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}
