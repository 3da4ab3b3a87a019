//! Word vectors, topic embeddings and the topic disparity matrix.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("vector file contains no vectors")]
    Empty,
    #[error("line {line}: expected {expected} values, found {found}")]
    Dimension {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: invalid number `{value}`")]
    InvalidNumber { line: usize, value: String },
    #[error("line {line}: non-finite vector entry")]
    NonFinite { line: usize },
    #[error("topic {topic}: none of its {words} top words has a vector")]
    NoVectors { topic: usize, words: usize },
    #[error("topic {topic}: embedding is the zero vector, cosine undefined")]
    ZeroEmbedding { topic: usize },
    #[error("vector for `{word}` has dimension {found}, store has {expected}")]
    WrongDimension {
        word: String,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Word to vector map with a fixed dimension.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingStore {
    dim: usize,
    index: HashMap<String, usize>,
    data: Vec<f64>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Self {
        EmbeddingStore {
            dim,
            ..Default::default()
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index
            .get(word)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    /// Inserts a vector; returns `false` (and keeps the old vector) when the
    /// word is already present.
    pub fn insert(&mut self, word: &str, vector: &[f64]) -> Result<bool, EmbeddingError> {
        if vector.len() != self.dim {
            return Err(EmbeddingError::WrongDimension {
                word: word.to_string(),
                expected: self.dim,
                found: vector.len(),
            });
        }
        if self.index.contains_key(word) {
            return Ok(false);
        }
        self.index.insert(word.to_string(), self.index.len());
        self.data.extend_from_slice(vector);
        Ok(true)
    }
}

/// Loads a word2vec text file.
pub fn load_vectors<P: AsRef<Path>>(path: P) -> Result<EmbeddingStore, EmbeddingError> {
    read_vectors(BufReader::new(File::open(path)?), None)
}

/// Reads word2vec text format: an optional `count dim` header, then one
/// `word v1 .. v_dim` line per word. Without a header the dimension is taken
/// from the first line. With `keep`, only matching words are stored (lines
/// are still validated).
pub fn read_vectors<R: BufRead>(
    reader: R,
    keep: Option<&dyn Fn(&str) -> bool>,
) -> Result<EmbeddingStore, EmbeddingError> {
    let mut store: Option<EmbeddingStore> = None;
    let mut values: Vec<f64> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let mut parts = line.split_whitespace();
        let Some(word) = parts.next() else { continue };
        let rest: Vec<&str> = parts.collect();

        if store.is_none() {
            if rest.len() == 1 {
                if let (Ok(_), Ok(dim)) = (word.parse::<usize>(), rest[0].parse::<usize>()) {
                    store = Some(EmbeddingStore::new(dim));
                    continue;
                }
            }
            store = Some(EmbeddingStore::new(rest.len()));
        }
        let store = store.as_mut().expect("initialised above");
        if rest.len() != store.dim || store.dim == 0 {
            return Err(EmbeddingError::Dimension {
                line: line_no,
                expected: store.dim,
                found: rest.len(),
            });
        }
        values.clear();
        for v in &rest {
            let x: f64 = v.parse().map_err(|_| EmbeddingError::InvalidNumber {
                line: line_no,
                value: v.to_string(),
            })?;
            if !x.is_finite() {
                return Err(EmbeddingError::NonFinite { line: line_no });
            }
            values.push(x);
        }
        if keep.map_or(true, |f| f(word)) {
            store.insert(word, &values)?;
        }
    }
    match store {
        Some(s) if !s.is_empty() => Ok(s),
        _ => Err(EmbeddingError::Empty),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub found: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicEmbedding {
    pub vector: Vec<f64>,
    pub coverage: Coverage,
}

/// Mean vector of the in-vocabulary `top_words`; out-of-vocabulary words are
/// skipped and reported in the coverage.
pub fn topic_embedding(
    topic: usize,
    top_words: &[String],
    store: &EmbeddingStore,
) -> Result<TopicEmbedding, EmbeddingError> {
    let mut sum = vec![0.0f64; store.dim()];
    let mut found = 0;
    for word in top_words {
        if let Some(v) = store.get(word) {
            found += 1;
            for (s, &x) in sum.iter_mut().zip(v) {
                *s += x;
            }
        }
    }
    if found == 0 {
        return Err(EmbeddingError::NoVectors {
            topic,
            words: top_words.len(),
        });
    }
    for s in &mut sum {
        *s /= found as f64;
    }
    Ok(TopicEmbedding {
        vector: sum,
        coverage: Coverage {
            found,
            total: top_words.len(),
        },
    })
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    // rounding can push |cos| marginally past 1
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

/// Symmetric topic-by-topic table of `1 - cos(e_i, e_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisparityMatrix {
    pub k: usize,
    pub values: Vec<Vec<f64>>,
    pub coverage: Vec<Coverage>,
    pub embeddings: Vec<Vec<f64>>,
}

impl DisparityMatrix {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values.get(i).and_then(|row| row.get(j)).copied()
    }

    pub fn from_embeddings(topics: Vec<TopicEmbedding>) -> Result<Self, EmbeddingError> {
        if let Some(topic) = topics
            .iter()
            .position(|t| t.vector.iter().all(|&x| x == 0.0))
        {
            return Err(EmbeddingError::ZeroEmbedding { topic });
        }
        let k = topics.len();
        let pairs: Vec<(usize, usize)> = (0..k)
            .flat_map(|i| ((i + 1)..k).map(move |j| (i, j)))
            .collect();
        let upper: Vec<f64> = pairs
            .par_iter()
            .map(|&(i, j)| 1.0 - cosine(&topics[i].vector, &topics[j].vector))
            .collect();
        let mut values = vec![vec![0.0; k]; k];
        for (&(i, j), d) in pairs.iter().zip(upper) {
            values[i][j] = d;
            values[j][i] = d;
        }
        Ok(DisparityMatrix {
            k,
            values,
            coverage: topics.iter().map(|t| t.coverage).collect(),
            embeddings: topics.into_iter().map(|t| t.vector).collect(),
        })
    }

    /// Square table with topic-id headers.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["topic".to_string()];
        header.extend((0..self.k).map(|i| i.to_string()));
        w.write_record(&header)?;
        for (i, row) in self.values.iter().enumerate() {
            let mut rec = vec![i.to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Disparity matrix from per-topic top-word lists.
pub fn disparity_matrix(
    top_words: &[Vec<String>],
    store: &EmbeddingStore,
) -> Result<DisparityMatrix, EmbeddingError> {
    let topics = top_words
        .iter()
        .enumerate()
        .map(|(t, words)| topic_embedding(t, words, store))
        .collect::<Result<Vec<_>, _>>()?;
    DisparityMatrix::from_embeddings(topics)
}

/// For every vocabulary term, the other terms whose vectors have cosine
/// similarity `>= threshold` with it. Terms without vectors get no
/// neighbours. Also returns the fraction of terms that have a vector.
pub fn similar_terms(terms: &[String], store: &EmbeddingStore, threshold: f64) -> (Vec<Vec<usize>>, f64) {
    let unit: Vec<Option<Vec<f64>>> = terms
        .iter()
        .map(|t| {
            store.get(t).and_then(|v| {
                let norm = v.iter().map(|&x| x * x).sum::<f64>().sqrt();
                (norm > 0.0).then(|| v.iter().map(|&x| x / norm).collect())
            })
        })
        .collect();
    let covered = terms.iter().filter(|t| store.contains(t)).count();
    let coverage = if terms.is_empty() {
        0.0
    } else {
        covered as f64 / terms.len() as f64
    };
    if threshold > 1.0 {
        return (vec![Vec::new(); terms.len()], coverage);
    }
    let lists = (0..terms.len())
        .into_par_iter()
        .map(|i| {
            let Some(a) = &unit[i] else { return Vec::new() };
            unit.iter()
                .enumerate()
                .filter(|&(j, b)| {
                    j != i
                        && b.as_ref().is_some_and(|b| {
                            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                            dot >= threshold
                        })
                })
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    (lists, coverage)
}
