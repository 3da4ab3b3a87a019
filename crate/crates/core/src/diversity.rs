//! Variety, balance and disparity of headline collections.
//!
//! Every metric consumes a single topic per headline (see
//! [`crate::assign`]). Values that a formula cannot produce, such as the
//! evenness of a one-topic set, are reported as [`Measure::Degenerate`]
//! or [`Measure::Absent`] rather than as an arbitrary number.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assign::TopicAssignment;
use crate::embeddings::DisparityMatrix;
use crate::ingest::{normalize_title, QueryCategory, ResultRecord, ResultSet, ResultSetKey};
use crate::textprep::Corpus;

#[derive(Debug, Error)]
pub enum DiversityError {
    #[error("distribution is empty")]
    EmptyDistribution,
    #[error("headline `{title}` in result set {key} has no topic")]
    Unassigned { key: String, title: String },
    #[error("topic {topic} is outside the disparity matrix of size {k}")]
    TopicOutOfRange { topic: usize, k: usize },
    #[error("excluding topics {0:?} leaves nothing")]
    NothingLeft(Vec<usize>),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A metric value that may be undefined for the input at hand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "flag", content = "value", rename_all = "snake_case")]
pub enum Measure {
    Value(f64),
    /// The formula reduces to 0/0, e.g. evenness of a single topic.
    Degenerate,
    /// Not enough elements for the metric to exist at all.
    Absent,
}

impl Measure {
    pub fn value(self) -> Option<f64> {
        match self {
            Measure::Value(v) => Some(v),
            _ => None,
        }
    }

    /// `ok`, `degenerate` or `absent`.
    pub fn flag(self) -> &'static str {
        match self {
            Measure::Value(_) => "ok",
            Measure::Degenerate => "degenerate",
            Measure::Absent => "absent",
        }
    }
}

/// Headline counts per topic. Topics with zero count are not stored.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicDistribution {
    counts: BTreeMap<usize, u64>,
    total: u64,
}

impl TopicDistribution {
    pub fn from_counts<I: IntoIterator<Item = (usize, u64)>>(counts: I) -> Self {
        let mut d = TopicDistribution::default();
        for (t, c) in counts {
            d.add(t, c);
        }
        d
    }

    pub fn from_topics<I: IntoIterator<Item = usize>>(topics: I) -> Self {
        Self::from_counts(topics.into_iter().map(|t| (t, 1)))
    }

    pub fn add(&mut self, topic: usize, count: u64) {
        if count > 0 {
            *self.counts.entry(topic).or_default() += count;
            self.total += count;
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, topic: usize) -> u64 {
        self.counts.get(&topic).copied().unwrap_or(0)
    }

    /// Number of topics with a nonzero count.
    pub fn topics_present(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &BTreeMap<usize, u64> {
        &self.counts
    }

    pub fn share(&self, topic: usize) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(topic) as f64 / self.total as f64
        }
    }
}

/// The maximum diversity that evenness is normalised by.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "k")]
pub enum SeiDenominator {
    /// `ln S` with `S` the number of topics present.
    #[default]
    TopicsPresent,
    /// `ln K` for a model with `K` topics.
    ModelTopics(usize),
}

/// `-sum p_i ln p_i` over the topics present.
pub fn shannon_diversity(dist: &TopicDistribution) -> f64 {
    let total = dist.total as f64;
    -dist
        .counts
        .values()
        .map(|&c| {
            let p = c as f64 / total;
            p * p.ln()
        })
        .sum::<f64>()
}

/// Shannon evenness: diversity divided by its maximum.
pub fn shannon_evenness(dist: &TopicDistribution, denominator: SeiDenominator) -> Result<Measure, DiversityError> {
    if dist.total == 0 {
        return Err(DiversityError::EmptyDistribution);
    }
    let richness = match denominator {
        SeiDenominator::TopicsPresent => dist.topics_present(),
        SeiDenominator::ModelTopics(k) => k,
    };
    if richness <= 1 {
        return Ok(Measure::Degenerate);
    }
    let s = dist.topics_present();
    if s == richness && dist.counts.values().all(|&c| c * s as u64 == dist.total) {
        // exactly uniform, avoid rounding away from 1
        return Ok(Measure::Value(1.0));
    }
    Ok(Measure::Value(shannon_diversity(dist) / (richness as f64).ln()))
}

/// Normalized headline to topic lookup.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadlineTopics {
    map: HashMap<String, usize>,
}

impl HeadlineTopics {
    /// Pairs every corpus document's headline with its assigned topic. The
    /// first document wins if two share a headline.
    pub fn new(corpus: &Corpus, assignment: &TopicAssignment) -> Self {
        let mut map = HashMap::with_capacity(corpus.docs.len());
        for doc in &corpus.docs {
            if let Some(t) = assignment.topic(doc.doc_id) {
                map.entry(doc.origin.clone()).or_insert(t);
            }
        }
        HeadlineTopics { map }
    }

    pub fn from_pairs<I: IntoIterator<Item = (S, usize)>, S: AsRef<str>>(pairs: I) -> Self {
        let mut map = HashMap::new();
        for (title, t) in pairs {
            map.entry(normalize_title(title.as_ref())).or_insert(t);
        }
        HeadlineTopics { map }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Topic of a raw (not yet normalized) title.
    pub fn topic(&self, title: &str) -> Option<usize> {
        self.map.get(&normalize_title(title)).copied()
    }

    fn record_topic(&self, set: &ResultSetKey, record: &ResultRecord) -> Result<usize, DiversityError> {
        self.topic(&record.title).ok_or_else(|| DiversityError::Unassigned {
            key: set.to_string(),
            title: record.title.clone(),
        })
    }

    /// Topics of a result set's headlines in rank order.
    pub fn set_topics(&self, set: &ResultSet) -> Result<Vec<usize>, DiversityError> {
        set.records.iter().map(|r| self.record_topic(&set.key, r)).collect()
    }
}

pub fn variety(topics: &[usize]) -> usize {
    topics.iter().collect::<BTreeSet<_>>().len()
}

/// Variety divided by the number of results; absent for an empty set.
pub fn relative_variety(topics: &[usize]) -> Option<f64> {
    (!topics.is_empty()).then(|| variety(topics) as f64 / topics.len() as f64)
}

/// Mean pairwise disparity over all unordered headline pairs; `None` for
/// fewer than two headlines.
pub fn resultset_disparity(topics: &[usize], matrix: &DisparityMatrix) -> Result<Option<f64>, DiversityError> {
    if let Some(&t) = topics.iter().find(|&&t| t >= matrix.k) {
        return Err(DiversityError::TopicOutOfRange { topic: t, k: matrix.k });
    }
    let n = topics.len();
    if n < 2 {
        return Ok(None);
    }
    let mut sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            sum += matrix.values[topics[i]][topics[j]];
        }
    }
    Ok(Some(sum / (n * (n - 1) / 2) as f64))
}

/// Per-result-set metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSetDiversity {
    pub key: ResultSetKey,
    pub category: QueryCategory,
    pub n_results: usize,
    pub variety: usize,
    pub relative_variety: Measure,
    pub sei: Measure,
    pub disparity: Measure,
}

/// Settings shared by every result-set computation.
#[derive(Debug, Clone, Copy, Default)]
pub struct DiversityOptions<'a> {
    pub denominator: SeiDenominator,
    /// Disparity is reported absent for every set without a matrix.
    pub matrix: Option<&'a DisparityMatrix>,
}

pub fn set_diversity(
    set: &ResultSet,
    topics: &HeadlineTopics,
    options: DiversityOptions<'_>,
) -> Result<ResultSetDiversity, DiversityError> {
    let ids = topics.set_topics(set)?;
    let n = ids.len();
    let sei = if n == 0 {
        Measure::Absent
    } else {
        shannon_evenness(&TopicDistribution::from_topics(ids.iter().copied()), options.denominator)?
    };
    let disparity = match options.matrix {
        None => Measure::Absent,
        Some(m) => match resultset_disparity(&ids, m)? {
            Some(d) => Measure::Value(d),
            None if n == 1 => Measure::Degenerate,
            None => Measure::Absent,
        },
    };
    Ok(ResultSetDiversity {
        key: set.key.clone(),
        category: set.query_category,
        n_results: n,
        variety: variety(&ids),
        relative_variety: relative_variety(&ids).map_or(Measure::Absent, Measure::Value),
        sei,
        disparity,
    })
}

/// [`set_diversity`] for every set, in input order.
pub fn compute_diversity(
    sets: &[ResultSet],
    topics: &HeadlineTopics,
    options: DiversityOptions<'_>,
) -> Result<Vec<ResultSetDiversity>, DiversityError> {
    sets.par_iter().map(|s| set_diversity(s, topics, options)).collect()
}

/// Writes one row per set and metric. The `value` cell is empty unless
/// `flag` is `ok`.
pub fn write_long_csv<W: Write>(metrics: &[ResultSetDiversity], out: W) -> Result<usize, DiversityError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["location", "query", "timestamp", "category", "n_results", "metric", "value", "flag"])?;
    let mut rows = 0;
    for m in metrics {
        let named = [
            ("variety", Measure::Value(m.variety as f64)),
            ("relative_variety", m.relative_variety),
            ("sei", m.sei),
            ("disparity", m.disparity),
        ];
        for (name, measure) in named {
            w.write_record([
                m.key.location.clone(),
                m.key.query.clone(),
                m.key.timestamp.format("%Y-%m-%d %H:%M:%S").to_string(),
                m.category.short_name().to_string(),
                m.n_results.to_string(),
                name.to_string(),
                measure.value().map(|v| v.to_string()).unwrap_or_default(),
                measure.flag().to_string(),
            ])?;
            rows += 1;
        }
    }
    w.flush()?;
    Ok(rows)
}

/// Topic distribution over every record's headline.
pub fn dataset_distribution(records: &[ResultRecord], topics: &HeadlineTopics) -> Result<TopicDistribution, DiversityError> {
    let mut dist = TopicDistribution::default();
    for r in records {
        let t = topics.record_topic(&r.key(), r)?;
        dist.add(t, 1);
    }
    Ok(dist)
}

/// Distribution of `records` and its evenness over the topics present.
/// Pass the all-results records or the unique-headline records for the
/// two scopes.
pub fn dataset_balance(
    records: &[ResultRecord],
    topics: &HeadlineTopics,
) -> Result<(TopicDistribution, Measure), DiversityError> {
    let dist = dataset_distribution(records, topics)?;
    let sei = shannon_evenness(&dist, SeiDenominator::TopicsPresent)?;
    Ok((dist, sei))
}

/// Distributions per group, e.g. per query or per category.
pub fn grouped_distributions<F>(
    records: &[ResultRecord],
    topics: &HeadlineTopics,
    group: F,
) -> Result<BTreeMap<String, TopicDistribution>, DiversityError>
where
    F: Fn(&ResultRecord) -> String,
{
    let mut out: BTreeMap<String, TopicDistribution> = BTreeMap::new();
    for r in records {
        let t = topics.record_topic(&r.key(), r)?;
        out.entry(group(r)).or_default().add(t, 1);
    }
    Ok(out)
}

/// `share_unique(i) - share_all(i)` for every topic in `0..k`. Positive
/// values mark topics that the search results show less often than the
/// unique headlines would suggest.
pub fn distribution_delta(all: &TopicDistribution, unique: &TopicDistribution, k: usize) -> Vec<f64> {
    (0..k).map(|t| unique.share(t) - all.share(t)).collect()
}

/// Drops the `excluded` topics and recomputes evenness on the remainder.
pub fn cleaned_balance(
    dist: &TopicDistribution,
    excluded: &BTreeSet<usize>,
) -> Result<(TopicDistribution, Measure), DiversityError> {
    let kept = TopicDistribution::from_counts(
        dist.counts
            .iter()
            .filter(|(t, _)| !excluded.contains(t))
            .map(|(&t, &c)| (t, c)),
    );
    if kept.total == 0 {
        return Err(DiversityError::NothingLeft(excluded.iter().copied().collect()));
    }
    let sei = shannon_evenness(&kept, SeiDenominator::TopicsPresent)?;
    Ok((kept, sei))
}
