//! Headline to topic mapping.
//!
//! Diversity metrics need exactly one topic per headline. Two strategies
//! are offered: the argmax of the document-topic distribution, and the
//! modal topic among the document's token assignments. Ties always go to
//! the lower topic index.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topicmodel::TopicModel;

#[derive(Debug, Error)]
pub enum AssignError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    Distribution,
    WordMajority,
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "distribution" | "dist" => Ok(Strategy::Distribution),
            "word_majority" | "majority" => Ok(Strategy::WordMajority),
            other => Err(format!("unknown assignment strategy `{other}`")),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::Distribution => "distribution",
            Strategy::WordMajority => "word_majority",
        })
    }
}

/// One topic per modeled document, indexed by document id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicAssignment {
    pub strategy: Strategy,
    pub k: usize,
    pub topics: Vec<usize>,
    /// Documents that had no tokens and fell back to their distribution.
    pub fallback: Vec<usize>,
}

impl TopicAssignment {
    pub fn len(&self) -> usize {
        self.topics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topics.is_empty()
    }

    pub fn topic(&self, doc: usize) -> Option<usize> {
        self.topics.get(doc).copied()
    }

    /// Writes `doc_id,topic` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), AssignError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["doc_id", "topic"])?;
        for (doc, topic) in self.topics.iter().enumerate() {
            w.write_record([doc.to_string(), topic.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the two-column form back. Rows must list documents `0..n` in
    /// order.
    pub fn read_csv<R: BufRead>(input: R, strategy: Strategy, k: usize) -> Result<Self, AssignError> {
        let mut reader = csv::Reader::from_reader(input);
        let mut topics = Vec::new();
        for (i, row) in reader.records().enumerate() {
            let row = row?;
            let line = i + 2;
            let field = |n: usize| -> Result<usize, AssignError> {
                row.get(n).and_then(|s| s.trim().parse().ok()).ok_or(AssignError::Parse {
                    line,
                    message: format!("column {n} is not a non-negative integer"),
                })
            };
            let (doc, topic) = (field(0)?, field(1)?);
            if doc != i {
                return Err(AssignError::Parse {
                    line,
                    message: format!("expected doc_id {i}, found {doc}"),
                });
            }
            if topic >= k {
                return Err(AssignError::Parse {
                    line,
                    message: format!("topic {topic} outside 0..{k}"),
                });
            }
            topics.push(topic);
        }
        Ok(TopicAssignment {
            strategy,
            k,
            topics,
            fallback: Vec::new(),
        })
    }
}

/// Index of the largest value, first one on ties.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Most frequent topic, lowest index on ties. `None` for no tokens.
pub fn majority_topic(tokens: &[usize], k: usize) -> Option<usize> {
    if tokens.is_empty() {
        return None;
    }
    let mut counts = vec![0usize; k.max(tokens.iter().max().map_or(0, |m| m + 1))];
    for &t in tokens {
        counts[t] += 1;
    }
    let mut best = 0;
    for (t, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = t;
        }
    }
    Some(best)
}

pub fn assign_from_distribution(model: &TopicModel) -> TopicAssignment {
    TopicAssignment {
        strategy: Strategy::Distribution,
        k: model.k(),
        topics: model.doc_topic_dist.iter().map(|d| argmax(d)).collect(),
        fallback: Vec::new(),
    }
}

pub fn assign_from_word_majority(model: &TopicModel) -> TopicAssignment {
    let k = model.k();
    let mut fallback = Vec::new();
    let topics = model
        .word_assignments
        .iter()
        .enumerate()
        .map(|(doc, z)| {
            majority_topic(z, k).unwrap_or_else(|| {
                fallback.push(doc);
                model.doc_topic_dist.get(doc).map_or(0, |d| argmax(d))
            })
        })
        .collect();
    TopicAssignment {
        strategy: Strategy::WordMajority,
        k,
        topics,
        fallback,
    }
}

pub fn assign(model: &TopicModel, strategy: Strategy) -> TopicAssignment {
    match strategy {
        Strategy::Distribution => assign_from_distribution(model),
        Strategy::WordMajority => assign_from_word_majority(model),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topicmodel::{CountTables, ModelConfig};

    fn model(dist: Vec<Vec<f64>>, words: Vec<Vec<usize>>) -> TopicModel {
        let k = dist.first().map_or(1, |d| d.len());
        TopicModel {
            config: ModelConfig::lda(k),
            terms: vec![],
            phi: vec![vec![]; k],
            doc_topic_dist: dist,
            word_assignments: words,
            doc_topic_sets: None,
            counts: CountTables {
                k,
                v: 0,
                topic_word: vec![],
                promotions: vec![],
            },
        }
    }

    #[test]
    fn distribution_argmax_and_ties() {
        let m = model(
            vec![vec![0.1, 0.7, 0.2], vec![0.4, 0.4, 0.2], vec![1.0 / 3.0; 3]],
            vec![vec![], vec![], vec![]],
        );
        assert_eq!(assign_from_distribution(&m).topics, vec![1, 0, 0]);
    }

    #[test]
    fn majority_and_ties() {
        assert_eq!(majority_topic(&[2, 2, 5], 6), Some(2));
        assert_eq!(majority_topic(&[1, 3], 4), Some(1));
        assert_eq!(majority_topic(&[3, 1], 4), Some(1));
        assert_eq!(majority_topic(&[], 4), None);
    }

    #[test]
    fn empty_document_falls_back_and_is_flagged() {
        let m = model(
            vec![vec![0.2, 0.8], vec![0.6, 0.4]],
            vec![vec![0, 0, 1], vec![]],
        );
        let a = assign_from_word_majority(&m);
        assert_eq!(a.topics, vec![0, 0]);
        assert_eq!(a.fallback, vec![1]);
    }

    #[test]
    fn csv_round_trip() {
        let a = TopicAssignment {
            strategy: Strategy::Distribution,
            k: 4,
            topics: vec![3, 0, 2],
            fallback: vec![],
        };
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "doc_id,topic\n0,3\n1,0\n2,2\n");
        assert_eq!(TopicAssignment::read_csv(&buf[..], Strategy::Distribution, 4).unwrap(), a);
        assert!(TopicAssignment::read_csv(&buf[..], Strategy::Distribution, 3).is_err());
    }
}
