//! Aggregation of result-set metrics and export of plot-ready tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diversity::{
    cleaned_balance, distribution_delta, grouped_distributions, shannon_evenness, DiversityError, HeadlineTopics,
    Measure, ResultSetDiversity, SeiDenominator, TopicDistribution,
};
use crate::embeddings::DisparityMatrix;
use crate::ingest::{CollectionStats, CorpusSplit, ResultRecord};
use crate::topicmodel::{SweepScore, TopicModel};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("unknown metric `{0}` (expected variety, relative_variety, sei or disparity)")]
    UnknownMetric(String),
    #[error("unknown grouping `{0}` (expected category or query)")]
    UnknownGroup(String),
    #[error("no result-set metrics to aggregate")]
    NoMetrics,
    #[error("non-finite value in column `{column}` of {table}")]
    NonFinite { table: String, column: String },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Diversity(#[from] DiversityError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    Category,
    Query,
}

impl GroupBy {
    pub fn name(self) -> &'static str {
        match self {
            GroupBy::Category => "category",
            GroupBy::Query => "query",
        }
    }

    fn key(self, m: &ResultSetDiversity) -> String {
        match self {
            GroupBy::Category => m.category.short_name().to_string(),
            GroupBy::Query => m.key.query.clone(),
        }
    }
}

impl std::str::FromStr for GroupBy {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "category" => Ok(GroupBy::Category),
            "query" => Ok(GroupBy::Query),
            _ => Err(ReportError::UnknownGroup(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Variety,
    RelativeVariety,
    Sei,
    Disparity,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [
        MetricKind::Variety,
        MetricKind::RelativeVariety,
        MetricKind::Sei,
        MetricKind::Disparity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Variety => "variety",
            MetricKind::RelativeVariety => "relative_variety",
            MetricKind::Sei => "sei",
            MetricKind::Disparity => "disparity",
        }
    }

    pub fn extract(self, m: &ResultSetDiversity) -> Measure {
        match self {
            MetricKind::Variety => Measure::Value(m.variety as f64),
            MetricKind::RelativeVariety => m.relative_variety,
            MetricKind::Sei => m.sei,
            MetricKind::Disparity => m.disparity,
        }
    }
}

impl std::str::FromStr for MetricKind {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        MetricKind::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| ReportError::UnknownMetric(s.to_string()))
    }
}

/// What aggregation does with [`Measure::Degenerate`] values. Absent
/// values are always excluded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy", content = "value")]
pub enum DegeneratePolicy {
    #[default]
    Exclude,
    MapTo(f64),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AggregateOptions {
    pub degenerate: DegeneratePolicy,
    /// Count searches without results as sets with variety 0. Off by
    /// default: such sets are excluded and counted.
    pub include_empty: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (`n - 1` denominator), 0 for one value.
    pub std_dev: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std_dev = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mid = sorted.len() / 2;
        let median = if sorted.len() % 2 == 0 {
            (sorted[mid - 1] + sorted[mid]) / 2.0
        } else {
            sorted[mid]
        };
        Some(Summary {
            mean,
            median,
            std_dev,
            min: sorted[0],
            max: sorted[sorted.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub group: String,
    pub metric: MetricKind,
    /// Result sets in the group, used or not.
    pub n_result_sets: usize,
    /// Sets whose value was left out (degenerate, absent or empty).
    pub n_excluded: usize,
    pub stats: Option<Summary>,
    /// Mean and standard deviation of variety divided by set size; only
    /// for the variety metric.
    pub relative: Option<(f64, f64)>,
}

/// Per-group statistics of one metric. Rows are ordered by group key.
pub fn aggregate(
    metrics: &[ResultSetDiversity],
    group_by: GroupBy,
    metric: MetricKind,
    options: AggregateOptions,
) -> Result<Vec<AggregateRow>, ReportError> {
    if metrics.is_empty() {
        return Err(ReportError::NoMetrics);
    }
    let mut groups: BTreeMap<String, Vec<&ResultSetDiversity>> = BTreeMap::new();
    for m in metrics {
        groups.entry(group_by.key(m)).or_default().push(m);
    }
    let groups: Vec<(String, Vec<&ResultSetDiversity>)> = groups.into_iter().collect();
    Ok(groups
        .into_par_iter()
        .map(|(group, members)| {
            let mut values = Vec::with_capacity(members.len());
            let mut relative = Vec::new();
            for m in &members {
                if m.n_results == 0 && !options.include_empty {
                    continue;
                }
                let v = match (metric.extract(m), options.degenerate) {
                    (Measure::Value(v), _) => v,
                    (Measure::Degenerate, DegeneratePolicy::MapTo(c)) => c,
                    _ => continue,
                };
                values.push(v);
                if metric == MetricKind::Variety {
                    if let Some(r) = m.relative_variety.value() {
                        relative.push(r);
                    }
                }
            }
            let stats = Summary::of(&values);
            AggregateRow {
                n_result_sets: members.len(),
                n_excluded: members.len() - values.len(),
                relative: (metric == MetricKind::Variety)
                    .then(|| Summary::of(&relative).map(|s| (s.mean, s.std_dev)))
                    .flatten(),
                stats,
                group,
                metric,
            }
        })
        .collect())
}

/// Named metric form of [`aggregate`].
pub fn aggregate_named(
    metrics: &[ResultSetDiversity],
    group_by: GroupBy,
    metric: &str,
    options: AggregateOptions,
) -> Result<Vec<AggregateRow>, ReportError> {
    aggregate(metrics, group_by, metric.parse()?, options)
}

/// Headline topic data needed for the distribution tables.
#[derive(Debug, Clone, Copy)]
pub struct TopicInputs<'a> {
    pub split: &'a CorpusSplit,
    pub topics: &'a HeadlineTopics,
    pub k: usize,
    /// Topics dropped for the cleaned balance table.
    pub excluded: &'a BTreeSet<usize>,
}

/// Everything [`export_tables`] can draw on. Missing inputs simply leave
/// their tables out.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReportInputs<'a> {
    pub stats: Option<&'a CollectionStats>,
    pub model: Option<&'a TopicModel>,
    pub top_n: usize,
    pub sweep: Option<&'a [SweepScore]>,
    pub selected_k: Option<usize>,
    pub topics: Option<TopicInputs<'a>>,
    pub matrix: Option<&'a DisparityMatrix>,
    pub metrics: Option<&'a [ResultSetDiversity]>,
    pub aggregate: AggregateOptions,
    pub denominator: SeiDenominator,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub family: String,
    /// Data rows, header excluded.
    pub rows: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn families(&self) -> BTreeSet<&str> {
        self.files.iter().map(|f| f.family.as_str()).collect()
    }
}

struct Table {
    file: String,
    family: &'static str,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(file: impl Into<String>, family: &'static str, header: &[&str]) -> Self {
        Table {
            file: file.into(),
            family,
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

/// Formats a finite number; anything else is an export bug.
fn num(v: f64, table: &str, column: &str) -> Result<String, ReportError> {
    if v.is_finite() {
        Ok(v.to_string())
    } else {
        Err(ReportError::NonFinite {
            table: table.to_string(),
            column: column.to_string(),
        })
    }
}

fn opt(v: Option<f64>, table: &str, column: &str) -> Result<String, ReportError> {
    v.map_or(Ok(String::new()), |v| num(v, table, column))
}

fn stats_tables(stats: &CollectionStats, out: &mut Vec<Table>) -> Result<(), ReportError> {
    let mut summary = Table::new("collection_summary.csv", "collection", &["statistic", "value"]);
    for (name, value) in [
        ("records", stats.total_records),
        ("unique_headlines", stats.unique_headlines),
        ("outlets", stats.outlets),
        ("result_sets", stats.result_sets),
        ("empty_result_sets", stats.empty_result_sets),
    ] {
        summary.push(vec![name.to_string(), value.to_string()]);
    }
    out.push(summary);

    let name = "article_age.csv";
    let mut ages = Table::new(name, "age", &["bucket", "count", "percent", "cumulative_percent"]);
    for b in &stats.ages {
        ages.push(vec![
            b.label.clone(),
            b.count.to_string(),
            num(b.percent, name, "percent")?,
            num(b.cumulative_percent, name, "cumulative_percent")?,
        ]);
    }
    out.push(ages);

    if let Some(overlap) = &stats.overlap {
        let name = "overlap.csv";
        let mut t = Table::new(name, "overlap", &["dataset_a", "dataset_b", "percent", "flag"]);
        for cell in &overlap.cells {
            t.push(vec![
                cell.a.clone(),
                cell.b.clone(),
                opt(cell.percent, name, "percent")?,
                if cell.percent.is_some() { "ok" } else { "absent" }.to_string(),
            ]);
        }
        out.push(t);
    }

    let name = "sources.csv";
    let mut sources = Table::new(name, "sources", &["rank", "source", "count", "cumulative_share"]);
    for (i, s) in stats.sources.iter().enumerate() {
        sources.push(vec![
            (i + 1).to_string(),
            s.source.clone(),
            s.count.to_string(),
            num(s.cumulative_share, name, "cumulative_share")?,
        ]);
    }
    out.push(sources);

    let name = "location_coverage.csv";
    let mut loc = Table::new(name, "location", &["locations", "headlines", "share"]);
    for (&n, &count) in &stats.locations.buckets {
        loc.push(vec![n.to_string(), count.to_string(), num(stats.locations.share(n), name, "share")?]);
    }
    out.push(loc);

    let mut sizes = Table::new(
        "result_set_sizes.csv",
        "result_set_sizes",
        &["location", "query", "timestamp", "category", "n_results"],
    );
    let mut rows: Vec<_> = stats.result_set_sizes.iter().collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    for (key, category, n) in rows {
        sizes.push(vec![
            key.location.clone(),
            key.query.clone(),
            key.timestamp.format("%Y-%m-%d %H:%M:%S").to_string(),
            category.short_name().to_string(),
            n.to_string(),
        ]);
    }
    out.push(sizes);
    Ok(())
}

fn model_tables(inputs: &ReportInputs<'_>, out: &mut Vec<Table>) -> Result<(), ReportError> {
    if let Some(model) = inputs.model {
        let n = inputs.top_n.max(1);
        let mut header = vec!["topic".to_string()];
        header.extend((1..=n).map(|i| format!("word_{i}")));
        let mut t = Table {
            file: "top_words.csv".into(),
            family: "top_words",
            header,
            rows: Vec::new(),
        };
        for (topic, words) in model.top_words(n).into_iter().enumerate() {
            let mut row = vec![topic.to_string()];
            row.extend(words);
            row.resize(n + 1, String::new());
            t.push(row);
        }
        out.push(t);
    }
    if let Some(scores) = inputs.sweep {
        let name = "coherence_sweep.csv";
        let mut t = Table::new(name, "coherence", &["k", "coherence", "selected"]);
        let mut scores = scores.to_vec();
        scores.sort_by_key(|s| s.k);
        for s in scores {
            t.push(vec![
                s.k.to_string(),
                opt(s.coherence, name, "coherence")?,
                (Some(s.k) == inputs.selected_k).to_string(),
            ]);
        }
        out.push(t);
    }
    if let Some(matrix) = inputs.matrix {
        let name = "disparity_matrix.csv";
        let mut header = vec!["topic".to_string()];
        header.extend((0..matrix.k).map(|i| i.to_string()));
        let mut t = Table {
            file: name.into(),
            family: "disparity_matrix",
            header,
            rows: Vec::new(),
        };
        for (i, row) in matrix.values.iter().enumerate() {
            let mut cells = vec![i.to_string()];
            for (j, &v) in row.iter().enumerate() {
                cells.push(num(v, name, &j.to_string())?);
            }
            t.push(cells);
        }
        out.push(t);
        let mut cov = Table::new("topic_embedding_coverage.csv", "disparity_matrix", &["topic", "found", "total"]);
        for (i, c) in matrix.coverage.iter().enumerate() {
            cov.push(vec![i.to_string(), c.found.to_string(), c.total.to_string()]);
        }
        out.push(cov);
    }
    Ok(())
}

fn sei_cells(m: Measure, table: &str) -> Result<[String; 2], ReportError> {
    Ok([opt(m.value(), table, "sei")?, m.flag().to_string()])
}

fn distribution_rows(
    t: &mut Table,
    group: &str,
    all: &TopicDistribution,
    unique: &TopicDistribution,
    k: usize,
) -> Result<(), ReportError> {
    let delta = distribution_delta(all, unique, k);
    for topic in 0..k {
        t.push(vec![
            group.to_string(),
            topic.to_string(),
            all.count(topic).to_string(),
            num(all.share(topic), &t.file, "share_all")?,
            unique.count(topic).to_string(),
            num(unique.share(topic), &t.file, "share_unique")?,
            num(delta[topic], &t.file, "delta")?,
        ]);
    }
    Ok(())
}

const DISTRIBUTION_HEADER: [&str; 7] = ["group", "topic", "count_all", "share_all", "count_unique", "share_unique", "delta"];

fn topic_tables(inputs: &TopicInputs<'_>, out: &mut Vec<Table>) -> Result<(), ReportError> {
    let TopicInputs {
        split,
        topics,
        k,
        excluded,
    } = *inputs;
    let whole = |_: &ResultRecord| String::from("all");
    let by_category = |r: &ResultRecord| r.query_category.short_name().to_string();
    let by_query = |r: &ResultRecord| r.query.clone();

    let mut balance = Table::new("balance.csv", "balance", &["view", "group", "headlines", "sei", "flag"]);
    let groupings: [(&str, &str, &dyn Fn(&ResultRecord) -> String); 3] = [
        ("topic_distribution.csv", "overall", &whole),
        ("topic_distribution_by_category.csv", "category", &by_category),
        ("topic_distribution_by_query.csv", "query", &by_query),
    ];
    for (file, view, key) in groupings {
        let all = grouped_distributions(&split.d_all, topics, key)?;
        let unique = grouped_distributions(&split.d_unique, topics, key)?;
        let mut t = Table::new(file, "distribution", &DISTRIBUTION_HEADER);
        let empty = TopicDistribution::default();
        let groups: BTreeSet<&String> = all.keys().chain(unique.keys()).collect();
        for g in groups {
            let a = all.get(g).unwrap_or(&empty);
            let u = unique.get(g).unwrap_or(&empty);
            distribution_rows(&mut t, g, a, u, k)?;
            for (scope, d) in [("all", a), ("unique", u)] {
                if d.total() == 0 {
                    continue;
                }
                let [v, flag] = sei_cells(shannon_evenness(d, SeiDenominator::TopicsPresent)?, "balance.csv")?;
                balance.push(vec![format!("{view}_{scope}"), g.clone(), d.total().to_string(), v, flag]);
            }
        }
        out.push(t);
    }

    // overall balance without the excluded topics
    if !excluded.is_empty() {
        for (scope, records) in [("all", &split.d_all), ("unique", &split.d_unique)] {
            let dist = grouped_distributions(records, topics, whole)?.remove("all").unwrap_or_default();
            if dist.total() == 0 {
                continue;
            }
            let (kept, sei) = cleaned_balance(&dist, excluded)?;
            let [v, flag] = sei_cells(sei, "balance.csv")?;
            balance.push(vec![format!("cleaned_{scope}"), "all".into(), kept.total().to_string(), v, flag]);
        }
    }
    out.push(balance);
    Ok(())
}

fn metric_tables(metrics: &[ResultSetDiversity], options: AggregateOptions, out: &mut Vec<Table>) -> Result<(), ReportError> {
    let mut sorted: Vec<&ResultSetDiversity> = metrics.iter().collect();
    sorted.sort_by(|a, b| a.key.cmp(&b.key));

    let name = "resultset_metrics.csv";
    let mut long = Table::new(
        name,
        "resultset_metrics",
        &["location", "query", "timestamp", "category", "n_results", "metric", "value", "flag"],
    );
    let key_cells = |m: &ResultSetDiversity| {
        vec![
            m.key.location.clone(),
            m.key.query.clone(),
            m.key.timestamp.format("%Y-%m-%d %H:%M:%S").to_string(),
            m.category.short_name().to_string(),
            m.n_results.to_string(),
        ]
    };
    for m in &sorted {
        for kind in MetricKind::ALL {
            let measure = kind.extract(m);
            let mut row = key_cells(m);
            row.push(kind.name().to_string());
            row.push(opt(measure.value(), name, "value")?);
            row.push(measure.flag().to_string());
            long.push(row);
        }
    }
    out.push(long);

    // boxplot inputs: one defined value per set
    for kind in [MetricKind::Sei, MetricKind::Disparity, MetricKind::Variety, MetricKind::RelativeVariety] {
        let file = format!("boxplot_{}.csv", kind.name());
        let mut t = Table::new(
            file.clone(),
            "boxplot",
            &["location", "query", "timestamp", "category", "n_results", "value"],
        );
        for m in &sorted {
            if m.n_results == 0 && !options.include_empty {
                continue;
            }
            if let Some(v) = kind.extract(m).value() {
                let mut row = key_cells(m);
                row.push(num(v, &file, "value")?);
                t.push(row);
            }
        }
        out.push(t);
    }

    for group_by in [GroupBy::Category, GroupBy::Query] {
        for kind in MetricKind::ALL {
            let file = format!("aggregate_{}_by_{}.csv", kind.name(), group_by.name());
            let mut t = Table::new(
                file.clone(),
                "aggregate",
                &[
                    group_by.name(),
                    "n_result_sets",
                    "n_excluded",
                    "mean",
                    "median",
                    "std_dev",
                    "min",
                    "max",
                    "relative_mean",
                    "relative_std_dev",
                ],
            );
            for row in aggregate(metrics, group_by, kind, options)? {
                let s = row.stats;
                t.push(vec![
                    row.group,
                    row.n_result_sets.to_string(),
                    row.n_excluded.to_string(),
                    opt(s.map(|s| s.mean), &file, "mean")?,
                    opt(s.map(|s| s.median), &file, "median")?,
                    opt(s.map(|s| s.std_dev), &file, "std_dev")?,
                    opt(s.map(|s| s.min), &file, "min")?,
                    opt(s.map(|s| s.max), &file, "max")?,
                    opt(row.relative.map(|r| r.0), &file, "relative_mean")?,
                    opt(row.relative.map(|r| r.1), &file, "relative_std_dev")?,
                ]);
            }
            out.push(t);
        }
    }
    Ok(())
}

fn write_table(dir: &Path, table: &Table) -> Result<(), ReportError> {
    let path = dir.join(&table.file);
    let file = fs::File::create(&path).map_err(|source| ReportError::Write {
        path: path.clone(),
        source,
    })?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    w.flush().map_err(|source| ReportError::Write { path, source })?;
    Ok(())
}

/// Writes every table the inputs allow into `out_dir` plus a
/// `manifest.json` listing them. Output bytes depend only on the inputs.
pub fn export_tables(inputs: &ReportInputs<'_>, out_dir: &Path) -> Result<Manifest, ReportError> {
    let mut tables = Vec::new();
    if let Some(stats) = inputs.stats {
        stats_tables(stats, &mut tables)?;
    }
    model_tables(inputs, &mut tables)?;
    if let Some(topics) = &inputs.topics {
        topic_tables(topics, &mut tables)?;
    }
    if let Some(metrics) = inputs.metrics {
        if !metrics.is_empty() {
            metric_tables(metrics, inputs.aggregate, &mut tables)?;
        }
    }

    fs::create_dir_all(out_dir).map_err(|source| ReportError::Write {
        path: out_dir.to_path_buf(),
        source,
    })?;
    tables.sort_by(|a, b| a.file.cmp(&b.file));
    let mut manifest = Manifest::default();
    for table in &tables {
        write_table(out_dir, table)?;
        manifest.files.push(ManifestEntry {
            file: table.file.clone(),
            family: table.family.to_string(),
            rows: table.rows.len(),
        });
    }
    let path = out_dir.join("manifest.json");
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    fs::File::create(&path)
        .and_then(|mut f| f.write_all(json.as_bytes()))
        .map_err(|source| ReportError::Write { path, source })?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_timestamp, QueryCategory, ResultSetKey};
    use approx::assert_abs_diff_eq;

    fn metric(query: &str, category: QueryCategory, n: usize, variety: usize, sei: Measure) -> ResultSetDiversity {
        ResultSetDiversity {
            key: ResultSetKey {
                location: "MU".into(),
                query: query.into(),
                timestamp: parse_timestamp("21-09-12_00:00:44").unwrap(),
            },
            category,
            n_results: n,
            variety,
            relative_variety: if n == 0 {
                Measure::Absent
            } else {
                Measure::Value(variety as f64 / n as f64)
            },
            sei,
            disparity: Measure::Absent,
        }
    }

    #[test]
    fn single_set_row() {
        let m = [metric("CDU", QueryCategory::EstablishedParties, 5, 3, Measure::Value(0.9))];
        let rows = aggregate(&m, GroupBy::Category, MetricKind::Variety, AggregateOptions::default()).unwrap();
        assert_eq!(rows.len(), 1);
        let s = rows[0].stats.unwrap();
        assert_eq!((rows[0].n_result_sets, s.mean, s.median, s.std_dev, s.min, s.max), (1, 3.0, 3.0, 0.0, 3.0, 3.0));
        assert_eq!(rows[0].group, "party");
        assert_eq!(rows[0].relative, Some((0.6, 0.0)));
    }

    #[test]
    fn two_varieties() {
        let m = [
            metric("CDU", QueryCategory::EstablishedParties, 5, 2, Measure::Value(0.9)),
            metric("SPD", QueryCategory::EstablishedParties, 5, 4, Measure::Value(0.9)),
        ];
        let s = aggregate(&m, GroupBy::Category, MetricKind::Variety, AggregateOptions::default()).unwrap()[0]
            .stats
            .unwrap();
        assert_eq!((s.mean, s.median), (3.0, 3.0));
        assert_abs_diff_eq!(s.std_dev, 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn degenerate_only_group() {
        let m = [
            metric("CDU", QueryCategory::EstablishedParties, 4, 1, Measure::Degenerate),
            metric("CDU", QueryCategory::EstablishedParties, 1, 1, Measure::Degenerate),
        ];
        let rows = aggregate(&m, GroupBy::Query, MetricKind::Sei, AggregateOptions::default()).unwrap();
        assert_eq!((rows[0].n_result_sets, rows[0].n_excluded, rows[0].stats), (2, 2, None));
        let mapped = AggregateOptions {
            degenerate: DegeneratePolicy::MapTo(0.0),
            ..Default::default()
        };
        let rows = aggregate(&m, GroupBy::Query, MetricKind::Sei, mapped).unwrap();
        assert_eq!(rows[0].n_excluded, 0);
        assert_eq!(rows[0].stats.unwrap().mean, 0.0);
    }

    #[test]
    fn empty_sets_are_excluded_and_counted() {
        let m = [
            metric("CDU", QueryCategory::EstablishedParties, 0, 0, Measure::Absent),
            metric("CDU", QueryCategory::EstablishedParties, 3, 2, Measure::Value(0.9)),
        ];
        let row = &aggregate(&m, GroupBy::Query, MetricKind::Variety, AggregateOptions::default()).unwrap()[0];
        assert_eq!((row.n_result_sets, row.n_excluded), (2, 1));
        assert_eq!(row.stats.unwrap().mean, 2.0);
    }

    #[test]
    fn unknown_metric_and_group() {
        assert!(matches!("entropy".parse::<MetricKind>(), Err(ReportError::UnknownMetric(_))));
        assert_eq!("relative-variety".parse::<MetricKind>().unwrap(), MetricKind::RelativeVariety);
        assert!("source".parse::<GroupBy>().is_err());
        assert!(aggregate(&[], GroupBy::Query, MetricKind::Sei, AggregateOptions::default()).is_err());
    }

    #[test]
    fn groups_sorted() {
        let m = [
            metric("b", QueryCategory::Topics, 2, 1, Measure::Degenerate),
            metric("a", QueryCategory::Candidates, 2, 2, Measure::Value(1.0)),
        ];
        let rows = aggregate(&m, GroupBy::Query, MetricKind::Sei, AggregateOptions::default()).unwrap();
        assert_eq!(rows.iter().map(|r| r.group.as_str()).collect::<Vec<_>>(), ["a", "b"]);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(Summary::of(&[3.0, 1.0, 2.0]).unwrap().median, 2.0);
        assert_eq!(Summary::of(&[4.0, 1.0, 2.0, 3.0]).unwrap().median, 2.5);
        assert!(Summary::of(&[]).is_none());
    }

    #[test]
    fn sentinels_stay_out_of_value_cells() {
        let dir = tempfile::tempdir().unwrap();
        let m = [metric("CDU", QueryCategory::EstablishedParties, 1, 1, Measure::Degenerate)];
        let inputs = ReportInputs {
            metrics: Some(&m),
            ..Default::default()
        };
        let manifest = export_tables(&inputs, dir.path()).unwrap();
        assert_eq!(manifest.families(), BTreeSet::from(["aggregate", "boxplot", "resultset_metrics"]));
        let long = fs::read_to_string(dir.path().join("resultset_metrics.csv")).unwrap();
        assert!(long.contains(",sei,,degenerate"));
        let boxplot = fs::read_to_string(dir.path().join("boxplot_sei.csv")).unwrap();
        assert_eq!(boxplot.lines().count(), 1);
    }
}
