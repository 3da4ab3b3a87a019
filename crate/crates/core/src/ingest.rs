//! Parsing and enrichment of crawled search results, the all/unique corpus
//! split, and the collection statistics computed on top of it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Read};
use std::str::FromStr;
use std::sync::OnceLock;

use chrono::{Duration, NaiveDate, NaiveDateTime};
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Timestamp layout used by the crawler, e.g. `21-09-12_00:00:44`.
pub const CRAWL_TIMESTAMP_FORMAT: &str = "%y-%m-%d_%H:%M:%S";

const TIMESTAMP_FORMATS: &[&str] = &[
    CRAWL_TIMESTAMP_FORMAT,
    "%Y-%m-%d_%H:%M:%S",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M:%S",
];

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("input header lacks column `{0}`")]
    MissingColumn(&'static str),
    #[error("row {row}: missing field `{field}`")]
    MissingField { row: usize, field: &'static str },
    #[error("row {row}: invalid {field} `{value}`")]
    InvalidField {
        row: usize,
        field: &'static str,
        value: String,
    },
    #[error("row {row}: query `{query}` is not in the category map")]
    UnknownQuery { row: usize, query: String },
    #[error("row {row}: {source}")]
    Age { row: usize, source: AgeError },
    #[error("category map line {line}: {message}")]
    CategoryMap { line: usize, message: String },
    #[error("result set {key}: duplicate rank {rank}")]
    DuplicateRank { key: ResultSetKey, rank: u8 },
    #[error("overlap needs at least two datasets, got {0}")]
    TooFewDatasets(usize),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgeError {
    #[error("unparseable publishing age `{0}`")]
    Unparseable(String),
    #[error("publishing date `{raw}` lies after the request timestamp {timestamp}")]
    InFuture { raw: String, timestamp: NaiveDateTime },
}

/// The seven query categories of the crawl.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QueryCategory {
    Candidates,
    EstablishedParties,
    PoliticsFields,
    ElectionFacts,
    GovernmentFormation,
    ElectionGuidance,
    Topics,
}

impl QueryCategory {
    pub const ALL: [QueryCategory; 7] = [
        QueryCategory::Candidates,
        QueryCategory::EstablishedParties,
        QueryCategory::PoliticsFields,
        QueryCategory::ElectionFacts,
        QueryCategory::GovernmentFormation,
        QueryCategory::ElectionGuidance,
        QueryCategory::Topics,
    ];

    pub fn name(self) -> &'static str {
        match self {
            QueryCategory::Candidates => "Candidates",
            QueryCategory::EstablishedParties => "Established Parties",
            QueryCategory::PoliticsFields => "Politics Fields",
            QueryCategory::ElectionFacts => "Election Facts",
            QueryCategory::GovernmentFormation => "Government Formation",
            QueryCategory::ElectionGuidance => "Election Guidance",
            QueryCategory::Topics => "Topics",
        }
    }

    /// Short label used in reports.
    pub fn short_name(self) -> &'static str {
        match self {
            QueryCategory::Candidates => "candidates",
            QueryCategory::EstablishedParties => "party",
            QueryCategory::PoliticsFields => "politicsfield",
            QueryCategory::ElectionFacts => "facts",
            QueryCategory::GovernmentFormation => "government",
            QueryCategory::ElectionGuidance => "guidance",
            QueryCategory::Topics => "topics",
        }
    }
}

impl fmt::Display for QueryCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QueryCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_alphanumeric())
            .flat_map(char::to_lowercase)
            .collect();
        let category = match key.as_str() {
            "candidates" | "candidate" => QueryCategory::Candidates,
            "establishedparties" | "party" | "parties" => QueryCategory::EstablishedParties,
            "politicsfields" | "politicsfield" => QueryCategory::PoliticsFields,
            "electionfacts" | "facts" => QueryCategory::ElectionFacts,
            "governmentformation" | "government" => QueryCategory::GovernmentFormation,
            "electionguidance" | "guidance" => QueryCategory::ElectionGuidance,
            "topics" | "topic" => QueryCategory::Topics,
            _ => return Err(format!("unknown query category `{s}`")),
        };
        Ok(category)
    }
}

/// Query to category lookup. Queries are matched after title normalization.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CategoryMap {
    entries: BTreeMap<String, QueryCategory>,
}

impl CategoryMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query: &str, category: QueryCategory) {
        self.entries.insert(normalize_title(query), category);
    }

    pub fn get(&self, query: &str) -> Option<QueryCategory> {
        self.entries.get(&normalize_title(query)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Reads a two-column `query<TAB>category` file (a comma is accepted when
    /// the line has no tab). Blank lines and `#` comments are skipped; a first
    /// line whose category does not parse is treated as a header.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, IngestError> {
        let mut map = CategoryMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let split = match trimmed.split_once('\t') {
                Some(pair) => Some(pair),
                None => trimmed.rsplit_once(','),
            };
            let Some((query, category)) = split else {
                return Err(IngestError::CategoryMap {
                    line: idx + 1,
                    message: "expected two columns".into(),
                });
            };
            match category.trim().parse::<QueryCategory>() {
                Ok(c) => map.insert(query.trim(), c),
                Err(_) if idx == 0 => continue,
                Err(message) => {
                    return Err(IngestError::CategoryMap {
                        line: idx + 1,
                        message,
                    })
                }
            }
        }
        Ok(map)
    }
}

/// One crawled search result, enriched with category, estimated publishing
/// date and title length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub location: String,
    pub query: String,
    pub timestamp: NaiveDateTime,
    pub rank: u8,
    pub published_raw: String,
    pub title: String,
    pub source: String,
    pub query_category: QueryCategory,
    pub estimated_published: NaiveDateTime,
    pub title_length: usize,
}

impl ResultRecord {
    pub fn key(&self) -> ResultSetKey {
        ResultSetKey {
            location: self.location.clone(),
            query: self.query.clone(),
            timestamp: self.timestamp,
        }
    }

    pub fn normalized_title(&self) -> String {
        normalize_title(&self.title)
    }

    pub fn age(&self) -> Duration {
        self.timestamp - self.estimated_published
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ResultSetKey {
    pub location: String,
    pub query: String,
    pub timestamp: NaiveDateTime,
}

impl fmt::Display for ResultSetKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {})",
            self.location,
            self.query,
            self.timestamp.format(CRAWL_TIMESTAMP_FORMAT)
        )
    }
}

/// A search that returned no results. It still counts as a result set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmptySearch {
    pub key: ResultSetKey,
    pub query_category: QueryCategory,
}

/// The records returned for one `(location, query, timestamp)` request,
/// ordered by rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultSet {
    pub key: ResultSetKey,
    pub query_category: QueryCategory,
    pub records: Vec<ResultRecord>,
}

impl ResultSet {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Output of [`parse_records`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParsedInput {
    pub records: Vec<ResultRecord>,
    pub empty_searches: Vec<EmptySearch>,
}

/// Trim, collapse internal whitespace and apply Unicode case folding.
pub fn normalize_title(title: &str) -> String {
    let collapsed = title.split_whitespace().collect::<Vec<_>>().join(" ");
    caseless::default_case_fold_str(&collapsed)
}

pub fn parse_timestamp(raw: &str) -> Option<NaiveDateTime> {
    let raw = raw.trim();
    TIMESTAMP_FORMATS
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(raw, fmt).ok())
}

fn relative_age_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?i)^vor\s+(\d+|einer|einem|eine|ein)\s+(minuten|minute|stunden|stunde|tagen|tag|wochen|woche)$",
        )
        .unwrap()
    })
}

fn german_date_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(\d{1,2})\.\s*(\p{L}+)\.?\s+(\d{4})$").unwrap())
}

fn german_month(name: &str) -> Option<u32> {
    let lower = name.to_lowercase();
    let prefix: String = lower.chars().take(3).collect();
    let month = match prefix.as_str() {
        "jan" => 1,
        "feb" => 2,
        "mär" | "mar" => 3,
        "apr" => 4,
        "mai" => 5,
        "jun" => 6,
        "jul" => 7,
        "aug" => 8,
        "sep" => 9,
        "okt" => 10,
        "nov" => 11,
        "dez" => 12,
        _ => return None,
    };
    Some(month)
}

fn parse_absolute_date(raw: &str) -> Option<NaiveDate> {
    for fmt in ["%d.%m.%Y", "%Y-%m-%d", "%d.%m.%y"] {
        if let Ok(date) = NaiveDate::parse_from_str(raw, fmt) {
            return Some(date);
        }
    }
    let caps = german_date_regex().captures(raw)?;
    let day: u32 = caps[1].parse().ok()?;
    let month = german_month(&caps[2])?;
    let year: i32 = caps[3].parse().ok()?;
    NaiveDate::from_ymd_opt(year, month, day)
}

/// Estimated publishing time from the `published` field, which is either a
/// German relative age (`vor 2 Stunden`) or an absolute date.
pub fn parse_relative_age(raw: &str, timestamp: NaiveDateTime) -> Result<NaiveDateTime, AgeError> {
    let text = raw.split_whitespace().collect::<Vec<_>>().join(" ");
    if let Some(caps) = relative_age_regex().captures(&text) {
        let amount: i64 = match caps[1].to_lowercase().as_str() {
            "ein" | "eine" | "einer" | "einem" => 1,
            digits => digits
                .parse()
                .map_err(|_| AgeError::Unparseable(raw.to_string()))?,
        };
        let unit = caps[2].to_lowercase();
        let offset = if unit.starts_with("minute") {
            Duration::minutes(amount)
        } else if unit.starts_with("stunde") {
            Duration::hours(amount)
        } else if unit.starts_with("tag") {
            Duration::days(amount)
        } else {
            Duration::weeks(amount)
        };
        return Ok(timestamp - offset);
    }
    let date = parse_absolute_date(&text).ok_or_else(|| AgeError::Unparseable(raw.to_string()))?;
    let published = date.and_hms_opt(0, 0, 0).expect("midnight is valid");
    if published > timestamp {
        return Err(AgeError::InFuture {
            raw: raw.to_string(),
            timestamp,
        });
    }
    Ok(published)
}

struct Columns {
    location: usize,
    query: usize,
    timestamp: usize,
    rank: usize,
    published: usize,
    title: usize,
    source: usize,
}

fn header_key(name: &str) -> String {
    name.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

impl Columns {
    fn from_headers(headers: &csv::StringRecord) -> Result<Self, IngestError> {
        let keys: Vec<String> = headers.iter().map(header_key).collect();
        let find = |names: &[&str], field: &'static str| {
            keys.iter()
                .position(|k| names.contains(&k.as_str()))
                .ok_or(IngestError::MissingColumn(field))
        };
        Ok(Columns {
            location: find(&["location"], "Location")?,
            query: find(&["searchquery", "query"], "Search query")?,
            timestamp: find(&["timestamp"], "Timestamp")?,
            rank: find(&["rank"], "Rank")?,
            published: find(&["published"], "Published")?,
            title: find(&["title"], "Title")?,
            source: find(&["source"], "Source")?,
        })
    }
}

/// Parses delimiter-separated result rows with a header naming the raw
/// fields (`Location, Search query, Timestamp, Rank, Published, Title,
/// Source`).
///
/// A row whose rank, published, title and source cells are all empty marks a
/// search without results and is returned in `empty_searches`. Titles are
/// HTML-entity decoded. Row numbers in errors count data rows from 1.
pub fn parse_records<R: Read>(
    input: R,
    delimiter: u8,
    categories: &CategoryMap,
) -> Result<ParsedInput, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .from_reader(input);
    let columns = Columns::from_headers(reader.headers()?)?;
    let mut out = ParsedInput::default();

    for (idx, row) in reader.records().enumerate() {
        let row_no = idx + 1;
        let row = row?;
        let cell = |i: usize| row.get(i).map(str::trim).unwrap_or("");
        let required = |i: usize, field: &'static str| {
            let v = cell(i);
            if v.is_empty() {
                Err(IngestError::MissingField { row: row_no, field })
            } else {
                Ok(v)
            }
        };

        let location = required(columns.location, "Location")?;
        let query = required(columns.query, "Search query")?;
        let ts_raw = required(columns.timestamp, "Timestamp")?;
        let timestamp = parse_timestamp(ts_raw).ok_or_else(|| IngestError::InvalidField {
            row: row_no,
            field: "Timestamp",
            value: ts_raw.to_string(),
        })?;
        let query_category = categories.get(query).ok_or_else(|| IngestError::UnknownQuery {
            row: row_no,
            query: query.to_string(),
        })?;
        let key = ResultSetKey {
            location: location.to_string(),
            query: query.to_string(),
            timestamp,
        };

        let payload = [columns.rank, columns.published, columns.title, columns.source];
        if payload.iter().all(|&i| cell(i).is_empty()) {
            out.empty_searches.push(EmptySearch {
                key,
                query_category,
            });
            continue;
        }

        let rank_raw = required(columns.rank, "Rank")?;
        let rank = rank_raw
            .parse::<u8>()
            .ok()
            .filter(|r| (1..=10).contains(r))
            .ok_or_else(|| IngestError::InvalidField {
                row: row_no,
                field: "Rank",
                value: rank_raw.to_string(),
            })?;
        let published_raw = required(columns.published, "Published")?;
        let title_raw = required(columns.title, "Title")?;
        let title = html_escape::decode_html_entities(title_raw).trim().to_string();
        if title.is_empty() {
            return Err(IngestError::MissingField {
                row: row_no,
                field: "Title",
            });
        }
        let source = html_escape::decode_html_entities(required(columns.source, "Source")?).into_owned();
        let estimated_published = parse_relative_age(published_raw, timestamp)
            .map_err(|source| IngestError::Age { row: row_no, source })?;
        let title_length = title.split_whitespace().count();

        out.records.push(ResultRecord {
            location: key.location,
            query: key.query,
            timestamp,
            rank,
            published_raw: published_raw.to_string(),
            title,
            source,
            query_category,
            estimated_published,
            title_length,
        });
    }
    Ok(out)
}

/// Groups records into result sets (ordered by key, records by rank) and
/// appends the empty searches as zero-length sets.
pub fn result_sets(
    records: &[ResultRecord],
    empty: &[EmptySearch],
) -> Result<Vec<ResultSet>, IngestError> {
    let mut groups: BTreeMap<ResultSetKey, ResultSet> = BTreeMap::new();
    for record in records {
        groups
            .entry(record.key())
            .or_insert_with(|| ResultSet {
                key: record.key(),
                query_category: record.query_category,
                records: Vec::new(),
            })
            .records
            .push(record.clone());
    }
    for search in empty {
        groups.entry(search.key.clone()).or_insert_with(|| ResultSet {
            key: search.key.clone(),
            query_category: search.query_category,
            records: Vec::new(),
        });
    }
    let mut sets: Vec<ResultSet> = groups.into_values().collect();
    for set in &mut sets {
        set.records.sort_by_key(|r| r.rank);
        if let Some(w) = set.records.windows(2).find(|w| w[0].rank == w[1].rank) {
            return Err(IngestError::DuplicateRank {
                key: set.key.clone(),
                rank: w[0].rank,
            });
        }
    }
    Ok(sets)
}

/// The all-results corpus and its unique-headline deduplication.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusSplit {
    pub d_all: Vec<ResultRecord>,
    pub d_unique: Vec<ResultRecord>,
}

/// Keeps the earliest-timestamp record per normalized title in `d_unique`
/// (first in input order on equal timestamps). `d_unique` preserves the
/// input order of the kept records.
pub fn split_corpus(records: &[ResultRecord]) -> CorpusSplit {
    let mut best: HashMap<String, usize> = HashMap::new();
    for (idx, record) in records.iter().enumerate() {
        best.entry(record.normalized_title())
            .and_modify(|cur| {
                if record.timestamp < records[*cur].timestamp {
                    *cur = idx;
                }
            })
            .or_insert(idx);
    }
    let mut keep: Vec<usize> = best.into_values().collect();
    keep.sort_unstable();
    CorpusSplit {
        d_all: records.to_vec(),
        d_unique: keep.into_iter().map(|i| records[i].clone()).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapCell {
    pub a: String,
    pub b: String,
    /// Percentage of the titles of `b` that also occur in `a`; absent when
    /// `b` is empty.
    pub percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapMatrix {
    pub names: Vec<String>,
    pub cells: Vec<OverlapCell>,
}

impl OverlapMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.a == a && c.b == b)
            .and_then(|c| c.percent)
    }
}

/// Directional overlap: cell `(A, B)` is `100 * |A ∩ B| / |B|`. The diagonal
/// is omitted.
pub fn overlap_matrix(datasets: &[(String, BTreeSet<String>)]) -> Result<OverlapMatrix, IngestError> {
    if datasets.len() < 2 {
        return Err(IngestError::TooFewDatasets(datasets.len()));
    }
    let mut cells = Vec::new();
    for (a, set_a) in datasets {
        for (b, set_b) in datasets {
            if a == b {
                continue;
            }
            let percent = if set_b.is_empty() {
                None
            } else {
                let shared = set_b.iter().filter(|t| set_a.contains(*t)).count();
                Some(100.0 * shared as f64 / set_b.len() as f64)
            };
            cells.push(OverlapCell {
                a: a.clone(),
                b: b.clone(),
                percent,
            });
        }
    }
    Ok(OverlapMatrix {
        names: datasets.iter().map(|(n, _)| n.clone()).collect(),
        cells,
    })
}

/// Set of normalized titles of a record list.
pub fn title_set(records: &[ResultRecord]) -> BTreeSet<String> {
    records.iter().map(ResultRecord::normalized_title).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgeBucket {
    pub label: String,
    pub count: usize,
    pub percent: f64,
    pub cumulative_percent: f64,
}

pub const AGE_BUCKET_LABELS: [&str; 5] = ["0 days", "1 day", "2 days", "3 days", ">=4 days"];

/// Article age histogram in whole days (`<24h`, `<48h`, `<72h`, `<96h`,
/// `>=96h`).
pub fn age_buckets(records: &[ResultRecord]) -> Vec<AgeBucket> {
    let mut counts = [0usize; 5];
    for record in records {
        let hours = record.age().num_seconds() as f64 / 3600.0;
        let idx = ((hours / 24.0).floor().max(0.0) as usize).min(4);
        counts[idx] += 1;
    }
    let total: usize = counts.iter().sum();
    let mut cumulative = 0usize;
    counts
        .iter()
        .zip(AGE_BUCKET_LABELS)
        .map(|(&count, label)| {
            cumulative += count;
            let pct = |n: usize| {
                if total == 0 {
                    0.0
                } else {
                    100.0 * n as f64 / total as f64
                }
            };
            AgeBucket {
                label: label.to_string(),
                count,
                percent: pct(count),
                cumulative_percent: pct(cumulative),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceShare {
    pub source: String,
    pub count: usize,
    pub cumulative_share: f64,
}

/// Sources by descending record count (ties by name) with cumulative share.
pub fn source_concentration(records: &[ResultRecord]) -> Vec<SourceShare> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for record in records {
        *counts.entry(record.source.as_str()).or_default() += 1;
    }
    let mut ordered: Vec<(&str, usize)> = counts.into_iter().collect();
    ordered.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let total = records.len() as f64;
    let mut running = 0usize;
    ordered
        .into_iter()
        .map(|(source, count)| {
            running += count;
            SourceShare {
                source: source.to_string(),
                count,
                cumulative_share: running as f64 / total,
            }
        })
        .collect()
}

/// Size of the smallest prefix of `shares` whose cumulative share reaches
/// `threshold`.
pub fn sources_to_reach(shares: &[SourceShare], threshold: f64) -> Option<usize> {
    shares
        .iter()
        .position(|s| s.cumulative_share >= threshold)
        .map(|i| i + 1)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LocationCoverage {
    /// number of locations showing a headline -> number of headlines
    pub buckets: BTreeMap<usize, usize>,
    pub headlines: usize,
}

impl LocationCoverage {
    pub fn share(&self, locations: usize) -> f64 {
        if self.headlines == 0 {
            return 0.0;
        }
        *self.buckets.get(&locations).unwrap_or(&0) as f64 / self.headlines as f64
    }
}

pub fn location_coverage(records: &[ResultRecord]) -> LocationCoverage {
    let mut seen: HashMap<String, BTreeSet<&str>> = HashMap::new();
    for record in records {
        seen.entry(record.normalized_title())
            .or_default()
            .insert(record.location.as_str());
    }
    let mut buckets = BTreeMap::new();
    for locations in seen.values() {
        *buckets.entry(locations.len()).or_insert(0) += 1;
    }
    LocationCoverage {
        buckets,
        headlines: seen.len(),
    }
}

/// Everything the collection analysis produces, in one serializable bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionStats {
    pub total_records: usize,
    pub unique_headlines: usize,
    pub outlets: usize,
    pub result_sets: usize,
    pub empty_result_sets: usize,
    pub overlap: Option<OverlapMatrix>,
    pub ages: Vec<AgeBucket>,
    pub sources: Vec<SourceShare>,
    pub locations: LocationCoverage,
    pub result_set_sizes: Vec<(ResultSetKey, QueryCategory, usize)>,
}

/// Computes the collection statistics for the primary dataset. `controls`
/// are additional named datasets used only for the overlap table.
pub fn collection_stats(
    primary_name: &str,
    split: &CorpusSplit,
    sets: &[ResultSet],
    controls: &[(String, CorpusSplit)],
) -> Result<CollectionStats, IngestError> {
    let overlap = if controls.is_empty() {
        None
    } else {
        let mut datasets = vec![(primary_name.to_string(), title_set(&split.d_unique))];
        datasets.extend(
            controls
                .iter()
                .map(|(name, s)| (name.clone(), title_set(&s.d_unique))),
        );
        Some(overlap_matrix(&datasets)?)
    };
    let outlets = split
        .d_all
        .iter()
        .map(|r| r.source.as_str())
        .collect::<BTreeSet<_>>()
        .len();
    Ok(CollectionStats {
        total_records: split.d_all.len(),
        unique_headlines: split.d_unique.len(),
        outlets,
        result_sets: sets.len(),
        empty_result_sets: sets.iter().filter(|s| s.is_empty()).count(),
        overlap,
        ages: age_buckets(&split.d_all),
        sources: source_concentration(&split.d_all),
        locations: location_coverage(&split.d_all),
        result_set_sizes: sets
            .iter()
            .map(|s| (s.key.clone(), s.query_category, s.len()))
            .collect(),
    })
}
