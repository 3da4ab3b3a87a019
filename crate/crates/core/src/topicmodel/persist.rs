//! On-disk form of a fitted model: one directory of plain-text files.
//!
//! | file | content |
//! |------|---------|
//! | `config.json` | the [`ModelConfig`] |
//! | `terms.txt` | vocabulary, one term per line, in id order |
//! | `phi.csv` | dense `K x V` topic-word table with term headers |
//! | `doc_topic_dist.csv` | one row per document |
//! | `word_assignments.txt` | per-document token topics, space separated |
//! | `top_words.csv` | top words per topic |
//! | `counts.json` | raw sampler counts and GPU-PDMM topic subsets |

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{CountTables, ModelConfig, TopicModel};

pub const TOP_WORDS_SAVED: usize = 20;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Serialize, Deserialize)]
struct StoredCounts {
    counts: CountTables,
    doc_topic_sets: Option<Vec<Vec<usize>>>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PersistError + '_ {
    move |source| PersistError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, PersistError> {
    fs::File::create(path).map(BufWriter::new).map_err(io_err(path))
}

fn open(path: &Path) -> Result<BufReader<fs::File>, PersistError> {
    fs::File::open(path).map(BufReader::new).map_err(io_err(path))
}

fn write_matrix(path: &Path, header: Vec<String>, rows: &[Vec<f64>]) -> Result<(), PersistError> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(&header)?;
    for (i, row) in rows.iter().enumerate() {
        let mut rec = Vec::with_capacity(row.len() + 1);
        rec.push(i.to_string());
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

fn read_matrix(path: &Path, width: usize) -> Result<Vec<Vec<f64>>, PersistError> {
    let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(open(path)?);
    let bad = |message: String| PersistError::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != width + 1 {
            return Err(bad(format!("row {i} has {} values, expected {width}", rec.len().saturating_sub(1))));
        }
        let row = rec
            .iter()
            .skip(1)
            .map(|v| v.parse::<f64>().map_err(|_| bad(format!("row {i}: `{v}` is not a number"))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Writes the model into `dir`, creating it if needed.
pub fn save_model(model: &TopicModel, dir: &Path) -> Result<(), PersistError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let path = dir.join("config.json");
    let mut f = create(&path)?;
    serde_json::to_writer_pretty(&mut f, &model.config)?;
    writeln!(f).and_then(|_| f.flush()).map_err(io_err(&path))?;

    let path = dir.join("terms.txt");
    let mut f = create(&path)?;
    for t in &model.terms {
        writeln!(f, "{t}").map_err(io_err(&path))?;
    }
    f.flush().map_err(io_err(&path))?;

    let mut header = vec!["topic".to_string()];
    header.extend(model.terms.iter().cloned());
    write_matrix(&dir.join("phi.csv"), header, &model.phi)?;

    let mut header = vec!["doc".to_string()];
    header.extend((0..model.k()).map(|t| t.to_string()));
    write_matrix(&dir.join("doc_topic_dist.csv"), header, &model.doc_topic_dist)?;

    let path = dir.join("word_assignments.txt");
    let mut f = create(&path)?;
    for z in &model.word_assignments {
        let line: Vec<String> = z.iter().map(|t| t.to_string()).collect();
        writeln!(f, "{}", line.join(" ")).map_err(io_err(&path))?;
    }
    f.flush().map_err(io_err(&path))?;

    let path = dir.join("top_words.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    let n = TOP_WORDS_SAVED.min(model.terms.len());
    let mut header = vec!["topic".to_string()];
    header.extend((1..=n).map(|i| format!("word_{i}")));
    w.write_record(&header)?;
    for (t, words) in model.top_words(n).into_iter().enumerate() {
        let mut rec = vec![t.to_string()];
        rec.extend(words);
        w.write_record(&rec)?;
    }
    w.flush().map_err(io_err(&path))?;

    let path = dir.join("counts.json");
    let mut f = create(&path)?;
    serde_json::to_writer(
        &mut f,
        &StoredCounts {
            counts: model.counts.clone(),
            doc_topic_sets: model.doc_topic_sets.clone(),
        },
    )?;
    writeln!(f).and_then(|_| f.flush()).map_err(io_err(&path))?;
    Ok(())
}

/// Reads a model written by [`save_model`].
pub fn load_model(dir: &Path) -> Result<TopicModel, PersistError> {
    let config: ModelConfig = serde_json::from_reader(open(&dir.join("config.json"))?)?;
    let path = dir.join("terms.txt");
    let terms = open(&path)?
        .lines()
        .collect::<Result<Vec<String>, _>>()
        .map_err(io_err(&path))?;
    let phi = read_matrix(&dir.join("phi.csv"), terms.len())?;
    let doc_topic_dist = read_matrix(&dir.join("doc_topic_dist.csv"), config.k)?;

    let path = dir.join("word_assignments.txt");
    let mut word_assignments = Vec::new();
    for (i, line) in open(&path)?.lines().enumerate() {
        let line = line.map_err(io_err(&path))?;
        let z = line
            .split_whitespace()
            .map(|t| match t.parse::<usize>() {
                Ok(t) if t < config.k => Ok(t),
                _ => Err(PersistError::Format {
                    path: path.clone(),
                    message: format!("line {}: bad topic `{t}`", i + 1),
                }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        word_assignments.push(z);
    }

    let stored: StoredCounts = serde_json::from_reader(open(&dir.join("counts.json"))?)?;
    if phi.len() != config.k {
        return Err(PersistError::Format {
            path: dir.join("phi.csv"),
            message: format!("{} topics, config says {}", phi.len(), config.k),
        });
    }
    Ok(TopicModel {
        config,
        terms,
        phi,
        doc_topic_dist,
        word_assignments,
        doc_topic_sets: stored.doc_topic_sets,
        counts: stored.counts,
    })
}
