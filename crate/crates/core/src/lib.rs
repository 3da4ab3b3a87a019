//! Media diversity analysis for news search result corpora.
//!
//! The crate is organised as a pipeline:
//!
//! * [`ingest`] parses crawled search results, enriches them and computes
//!   collection statistics (overlap, article age, source concentration,
//!   location coverage).
//! * [`textprep`] turns headlines into token documents.
//! * [`topicmodel`] fits LDA and GPU-PDMM by collapsed Gibbs sampling, scores
//!   NPMI coherence and sweeps the topic count.
//! * [`assign`] maps every headline to exactly one topic.
//! * [`embeddings`] loads word vectors and derives the topic disparity matrix.
//! * [`diversity`] computes variety, balance (Shannon evenness) and disparity
//!   for the whole corpus and for single result sets.
//! * [`report`] aggregates per-result-set metrics and writes plot-ready tables.

pub mod assign;
pub mod diversity;
pub mod embeddings;
pub mod ingest;
pub mod report;
pub mod textprep;
pub mod topicmodel;

pub use assign::{assign_from_distribution, assign_from_word_majority, Strategy, TopicAssignment};
pub use diversity::{HeadlineTopics, Measure, ResultSetDiversity, SeiDenominator, TopicDistribution};
pub use embeddings::{DisparityMatrix, EmbeddingStore};
pub use ingest::{QueryCategory, ResultRecord, ResultSet, ResultSetKey};
pub use textprep::{Corpus, TokenDocument, Vocabulary};
pub use topicmodel::{Algorithm, GpuParams, ModelConfig, TopicModel};
