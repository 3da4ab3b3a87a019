//! Headline preprocessing: cleaning, tokenization, lemmatization, rare-word
//! and stopword removal.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::normalize_title;

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords_de.txt");

#[derive(Debug, Error)]
pub enum PrepError {
    #[error("cannot preprocess an empty corpus")]
    EmptyCorpus,
    #[error("lemma table line {line}: expected `form<TAB>lemma`")]
    LemmaLine { line: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepConfig {
    /// Terms occurring fewer times than this in the whole corpus are dropped.
    pub min_count: usize,
    pub stopwords: BTreeSet<String>,
    pub lemmas: BTreeMap<String, String>,
}

impl Default for PrepConfig {
    fn default() -> Self {
        PrepConfig {
            min_count: 3,
            stopwords: default_stopwords(),
            lemmas: BTreeMap::new(),
        }
    }
}

/// The bundled German stopword list.
pub fn default_stopwords() -> BTreeSet<String> {
    parse_word_list(DEFAULT_STOPWORDS)
}

fn parse_word_list(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

/// One entry per line; `#` starts a comment line.
pub fn load_stopwords<R: BufRead>(mut reader: R) -> Result<BTreeSet<String>, PrepError> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    Ok(parse_word_list(&text))
}

/// Tab-separated `form<TAB>lemma` pairs, keys lowercased.
pub fn load_lemmas<R: BufRead>(reader: R) -> Result<BTreeMap<String, String>, PrepError> {
    let mut lemmas = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (form, lemma) = trimmed
            .split_once('\t')
            .ok_or(PrepError::LemmaLine { line: idx + 1 })?;
        lemmas.insert(form.trim().to_lowercase(), lemma.trim().to_lowercase());
    }
    Ok(lemmas)
}

/// Replaces everything except letters, digits and intra-word hyphens by a
/// space.
pub fn strip_special(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    chars
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            if c.is_alphanumeric() {
                c
            } else if c == '-'
                && i > 0
                && chars[i - 1].is_alphanumeric()
                && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric())
            {
                c
            } else {
                ' '
            }
        })
        .collect()
}

/// Cleaning, lowercasing, whitespace tokenization and lemma lookup.
pub fn tokenize(text: &str, lemmas: &BTreeMap<String, String>) -> Vec<String> {
    strip_special(text)
        .to_lowercase()
        .split_whitespace()
        .map(|t| lemmas.get(t).cloned().unwrap_or_else(|| t.to_string()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenDocument {
    pub doc_id: usize,
    pub tokens: Vec<String>,
    /// Vocabulary ids of `tokens`, same order.
    pub word_ids: Vec<usize>,
    /// The normalized headline this document came from.
    pub origin: String,
    /// Set when preprocessing removed every token.
    pub empty: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    doc_freq: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        let index = r
            .terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary {
            terms: r.terms,
            index,
            doc_freq: r.doc_freq,
        }
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            terms: v.terms,
            doc_freq: v.doc_freq,
        }
    }
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn term(&self, id: usize) -> Option<&str> {
        self.terms.get(id).map(String::as_str)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// Number of documents containing the term.
    pub fn doc_freq(&self, id: usize) -> usize {
        self.doc_freq[id]
    }

    fn intern(&mut self, term: &str) -> usize {
        if let Some(&id) = self.index.get(term) {
            return id;
        }
        let id = self.terms.len();
        self.terms.push(term.to_string());
        self.index.insert(term.to_string(), id);
        self.doc_freq.push(0);
        id
    }
}

/// Token documents plus their vocabulary.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub docs: Vec<TokenDocument>,
    pub vocab: Vocabulary,
}

impl Corpus {
    pub fn total_tokens(&self) -> usize {
        self.docs.iter().map(|d| d.word_ids.len()).sum()
    }

    pub fn empty_docs(&self) -> usize {
        self.docs.iter().filter(|d| d.empty).count()
    }

    /// Builds a corpus directly from token lists, without any filtering.
    pub fn from_tokens<S: AsRef<str>>(docs: &[Vec<S>]) -> Corpus {
        let mut vocab = Vocabulary::default();
        let docs = docs
            .iter()
            .enumerate()
            .map(|(doc_id, tokens)| {
                let tokens: Vec<String> = tokens.iter().map(|t| t.as_ref().to_string()).collect();
                let word_ids: Vec<usize> = tokens.iter().map(|t| vocab.intern(t)).collect();
                TokenDocument {
                    doc_id,
                    origin: tokens.join(" "),
                    empty: tokens.is_empty(),
                    tokens,
                    word_ids,
                }
            })
            .collect();
        let mut corpus = Corpus { docs, vocab };
        corpus.recount_doc_freq();
        corpus
    }

    fn recount_doc_freq(&mut self) {
        let mut df = vec![0usize; self.vocab.len()];
        for doc in &self.docs {
            let distinct: BTreeSet<usize> = doc.word_ids.iter().copied().collect();
            for id in distinct {
                df[id] += 1;
            }
        }
        self.vocab.doc_freq = df;
    }
}

/// Runs the preprocessing pipeline over `headlines`.
///
/// Steps, in order: strip special characters, lowercase, split on
/// whitespace, lemmatize (identity for unknown forms), drop terms whose
/// corpus frequency is below `min_count`, drop stopwords. A document left
/// without tokens is kept and flagged `empty`.
pub fn preprocess<S: AsRef<str> + Sync>(headlines: &[S], config: &PrepConfig) -> Result<Corpus, PrepError> {
    if headlines.is_empty() {
        return Err(PrepError::EmptyCorpus);
    }
    let tokenized: Vec<Vec<String>> = headlines
        .par_iter()
        .map(|h| tokenize(h.as_ref(), &config.lemmas))
        .collect();

    let mut freq: HashMap<&str, usize> = HashMap::new();
    for tokens in &tokenized {
        for t in tokens {
            *freq.entry(t.as_str()).or_default() += 1;
        }
    }

    let mut vocab = Vocabulary::default();
    let mut docs = Vec::with_capacity(headlines.len());
    for (doc_id, (headline, tokens)) in headlines.iter().zip(&tokenized).enumerate() {
        let kept: Vec<String> = tokens
            .iter()
            .filter(|t| freq[t.as_str()] >= config.min_count && !config.stopwords.contains(t.as_str()))
            .cloned()
            .collect();
        let word_ids = kept.iter().map(|t| vocab.intern(t)).collect();
        docs.push(TokenDocument {
            doc_id,
            empty: kept.is_empty(),
            tokens: kept,
            word_ids,
            origin: normalize_title(headline.as_ref()),
        });
    }
    let mut corpus = Corpus { docs, vocab };
    corpus.recount_doc_freq();
    Ok(corpus)
}
