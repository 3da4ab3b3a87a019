use std::collections::{BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use newsdiv::assign::assign;
use newsdiv::diversity::{compute_diversity, write_long_csv, DiversityOptions};
use newsdiv::embeddings::{disparity_matrix, read_vectors};
use newsdiv::ingest::{collection_stats, parse_records, result_sets, split_corpus, CategoryMap, CorpusSplit, ParsedInput};
use newsdiv::report::{export_tables, AggregateOptions, ReportInputs, TopicInputs};
use newsdiv::textprep::{default_stopwords, load_lemmas, load_stopwords, preprocess, PrepConfig};
use newsdiv::topicmodel::{coherence, load_model, save_model, sweep_select, Algorithm, ModelConfig, SweepScore};
use newsdiv::{Corpus, DisparityMatrix, EmbeddingStore, HeadlineTopics, ResultSet, SeiDenominator, Strategy, TopicAssignment};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{Config, Denominator};
use crate::workspace::{read_json, write_json, DataContext, Failure, Outcome, Ran, Stage, StageSpec, Workspace};

pub struct Context {
    pub ws: Workspace,
    pub config: Config,
    pub jobs: Option<usize>,
}

/// Sweep results kept next to the selected model.
#[derive(Serialize, Deserialize)]
struct SweepRecord {
    selected_k: usize,
    scores: Vec<SweepScore>,
}

fn open(path: &Path) -> Outcome<BufReader<File>> {
    File::open(path).map(BufReader::new).data_at(path)
}

fn create(path: &Path) -> Outcome<BufWriter<File>> {
    File::create(path).map(BufWriter::new).data_at(path)
}

impl Context {
    fn required_path(&self, value: &Option<PathBuf>, key: &str) -> Outcome<PathBuf> {
        value
            .as_deref()
            .map(|p| self.ws.resolve(p))
            .ok_or_else(|| Failure::config(format!("`{key}` is not set")))
    }

    fn vectors_path(&self) -> Outcome<PathBuf> {
        self.required_path(&self.config.embed.vectors, "embed.vectors")
    }

    /// Word vectors restricted to `terms`.
    fn vectors_for(&self, path: &Path, terms: &[String]) -> Outcome<EmbeddingStore> {
        let wanted: HashSet<&str> = terms.iter().map(String::as_str).collect();
        let keep = |w: &str| wanted.contains(w);
        read_vectors(open(path)?, Some(&keep)).data_at(path)
    }

    fn load_corpus(&self) -> Outcome<Corpus> {
        read_json(&self.ws.dir(Stage::Preprocess).join("corpus.json"))
    }

    fn load_crawl(&self, path: &Path, categories: &CategoryMap) -> Outcome<ParsedInput> {
        let delimiter = u8::try_from(self.config.ingest.delimiter)
            .ok()
            .filter(u8::is_ascii)
            .ok_or_else(|| Failure::config("`ingest.delimiter` must be a single ASCII character"))?;
        parse_records(open(path)?, delimiter, categories).data_at(path)
    }
}

pub fn ingest(ctx: &Context) -> Outcome<Ran> {
    let cfg = &ctx.config.ingest;
    let input = ctx.required_path(&cfg.input, "ingest.input")?;
    let categories_path = ctx.required_path(&cfg.categories, "ingest.categories")?;
    let controls: Vec<(String, PathBuf)> =
        cfg.controls.iter().map(|(n, p)| (n.clone(), ctx.ws.resolve(p))).collect();
    let mut inputs = vec![input.clone(), categories_path.clone()];
    inputs.extend(controls.iter().map(|c| c.1.clone()));
    let spec = StageSpec {
        stage: Stage::Ingest,
        command: "ingest",
        settings: json!({ "delimiter": cfg.delimiter, "controls": cfg.controls.keys().collect::<Vec<_>>() }),
        inputs,
        upstream: vec![],
    };
    ctx.ws.run(spec, |dir| {
        let categories = CategoryMap::from_reader(open(&categories_path)?).data_at(&categories_path)?;
        let parsed = ctx.load_crawl(&input, &categories)?;
        let sets = result_sets(&parsed.records, &parsed.empty_searches).data_at(&input)?;
        let split = split_corpus(&parsed.records);
        let mut control_splits: Vec<(String, CorpusSplit)> = Vec::new();
        for (name, path) in &controls {
            let control = ctx.load_crawl(path, &categories)?;
            control_splits.push((name.clone(), split_corpus(&control.records)));
        }
        write_json(&dir.join("split.json"), &split)?;
        write_json(&dir.join("result_sets.json"), &sets)?;
        write_json(&dir.join("controls.json"), &control_splits)?;
        Ok(format!(
            "{} records in {} result sets ({} empty), {} unique headlines",
            parsed.records.len(),
            sets.len(),
            parsed.empty_searches.len(),
            split.d_unique.len()
        ))
    })
}

pub fn stats(ctx: &Context) -> Outcome<Ran> {
    let upstream = ctx.ws.require(Stage::Ingest)?;
    let spec = StageSpec {
        stage: Stage::Stats,
        command: "stats",
        settings: json!({ "name": ctx.config.ingest.name }),
        inputs: vec![],
        upstream: vec![(Stage::Ingest, upstream)],
    };
    ctx.ws.run(spec, |dir| {
        let ingest = ctx.ws.dir(Stage::Ingest);
        let split: CorpusSplit = read_json(&ingest.join("split.json"))?;
        let sets: Vec<ResultSet> = read_json(&ingest.join("result_sets.json"))?;
        let controls: Vec<(String, CorpusSplit)> = read_json(&ingest.join("controls.json"))?;
        let stats = collection_stats(&ctx.config.ingest.name, &split, &sets, &controls).map_err(Failure::data)?;
        write_json(&dir.join("collection_stats.json"), &stats)?;
        Ok(format!(
            "{} records, {} unique headlines from {} outlets",
            stats.total_records, stats.unique_headlines, stats.outlets
        ))
    })
}

pub fn preprocess_stage(ctx: &Context) -> Outcome<Ran> {
    let cfg = &ctx.config.textprep;
    let upstream = ctx.ws.require(Stage::Ingest)?;
    let stopwords = cfg.stopwords.as_deref().map(|p| ctx.ws.resolve(p));
    let lemmas = cfg.lemmas.as_deref().map(|p| ctx.ws.resolve(p));
    let spec = StageSpec {
        stage: Stage::Preprocess,
        command: "preprocess",
        settings: json!({ "min_count": cfg.min_count, "stopwords": stopwords.is_some(), "lemmas": lemmas.is_some() }),
        inputs: stopwords.iter().chain(&lemmas).cloned().collect(),
        upstream: vec![(Stage::Ingest, upstream)],
    };
    ctx.ws.run(spec, |dir| {
        let config = PrepConfig {
            min_count: cfg.min_count,
            stopwords: match &stopwords {
                Some(p) => load_stopwords(open(p)?).data_at(p)?,
                None => default_stopwords(),
            },
            lemmas: match &lemmas {
                Some(p) => load_lemmas(open(p)?).data_at(p)?,
                None => Default::default(),
            },
        };
        let split: CorpusSplit = read_json(&ctx.ws.dir(Stage::Ingest).join("split.json"))?;
        let titles: Vec<&str> = split.d_unique.iter().map(|r| r.title.as_str()).collect();
        let corpus = preprocess(&titles, &config).map_err(Failure::data)?;
        write_json(&dir.join("corpus.json"), &corpus)?;
        let path = dir.join("tokens.txt");
        let mut out = create(&path)?;
        for doc in &corpus.docs {
            writeln!(out, "{}", doc.tokens.join(" ")).data_at(&path)?;
        }
        out.flush().data_at(&path)?;
        Ok(format!(
            "{} documents, {} terms, {} tokens, {} empty",
            corpus.docs.len(),
            corpus.vocab.len(),
            corpus.total_tokens(),
            corpus.empty_docs()
        ))
    })
}

/// Settings and input files shared by `fit` and `sweep`.
fn model_spec<'a>(ctx: &Context, command: &'a str, settings: serde_json::Value, algorithm: Algorithm) -> Outcome<StageSpec<'a>> {
    let upstream = ctx.ws.require(Stage::Preprocess)?;
    let inputs = match algorithm {
        Algorithm::GpuPdmm => vec![ctx.vectors_path()?],
        Algorithm::Lda => vec![],
    };
    Ok(StageSpec {
        stage: Stage::Model,
        command,
        settings,
        inputs,
        upstream: vec![(Stage::Preprocess, upstream)],
    })
}

fn model_store(ctx: &Context, algorithm: Algorithm, corpus: &Corpus) -> Outcome<Option<EmbeddingStore>> {
    match algorithm {
        Algorithm::Lda => Ok(None),
        Algorithm::GpuPdmm => {
            let path = ctx.vectors_path()?;
            ctx.vectors_for(&path, corpus.vocab.terms()).map(Some)
        }
    }
}

fn validated(config: ModelConfig) -> Outcome<ModelConfig> {
    config.validate().map_err(Failure::config)?;
    Ok(config)
}

pub fn fit(ctx: &Context, k: Option<usize>, algorithm: Option<Algorithm>) -> Outcome<Ran> {
    let mut section = ctx.config.model.clone();
    if let Some(a) = algorithm {
        section.algorithm = a;
    }
    let config = validated(section.model_config(k.unwrap_or(section.k)))?;
    let top_n = ctx.config.sweep.top_n;
    let spec = model_spec(ctx, "fit", json!({ "model": config, "top_n": top_n }), config.algorithm)?;
    ctx.ws.run(spec, |dir| {
        let corpus = ctx.load_corpus()?;
        let store = model_store(ctx, config.algorithm, &corpus)?;
        let model = match &store {
            Some(s) => newsdiv::topicmodel::fit_gpu_pdmm(&corpus, &config, s),
            None => newsdiv::topicmodel::fit_lda(&corpus, &config),
        }
        .map_err(Failure::data)?;
        let report = coherence(&model, &corpus, top_n);
        save_model(&model, dir).map_err(Failure::data)?;
        write_json(&dir.join("coherence.json"), &report)?;
        Ok(format!(
            "{:?} with K={}, coherence {}",
            config.algorithm,
            config.k,
            report.mean.map_or("n/a".into(), |m| format!("{m:.4}"))
        ))
    })
}

pub fn sweep(ctx: &Context, k_min: Option<usize>, k_max: Option<usize>, algorithm: Option<Algorithm>) -> Outcome<Ran> {
    let mut section = ctx.config.model.clone();
    if let Some(a) = algorithm {
        section.algorithm = a;
    }
    let k_min = k_min.unwrap_or(ctx.config.sweep.k_min);
    let k_max = k_max.unwrap_or(ctx.config.sweep.k_max);
    if k_min < 1 || k_min > k_max {
        return Err(Failure::config(format!("invalid topic range {k_min}..={k_max}")));
    }
    let base = validated(section.model_config(k_min))?;
    let top_n = ctx.config.sweep.top_n;
    let settings = json!({ "model": base, "k_min": k_min, "k_max": k_max, "top_n": top_n });
    let spec = model_spec(ctx, "sweep", settings, base.algorithm)?;
    ctx.ws.run(spec, |dir| {
        let corpus = ctx.load_corpus()?;
        let store = model_store(ctx, base.algorithm, &corpus)?;
        let ks: Vec<usize> = (k_min..=k_max).collect();
        let outcome = sweep_select(&corpus, &base, &ks, store.as_ref(), top_n, ctx.jobs).map_err(Failure::data)?;
        save_model(&outcome.model, dir).map_err(Failure::data)?;
        write_json(&dir.join("coherence.json"), &coherence(&outcome.model, &corpus, top_n))?;
        write_json(
            &dir.join("sweep.json"),
            &SweepRecord {
                selected_k: outcome.selected_k,
                scores: outcome.scores.clone(),
            },
        )?;
        let best = outcome.scores.iter().find(|s| s.k == outcome.selected_k).and_then(|s| s.coherence);
        Ok(format!(
            "K in {k_min}..={k_max}: selected K={} (coherence {})",
            outcome.selected_k,
            best.map_or("n/a".into(), |c| format!("{c:.4}"))
        ))
    })
}

pub fn assign_stage(ctx: &Context, strategy: Option<Strategy>) -> Outcome<Ran> {
    let strategy = strategy.unwrap_or(ctx.config.assign.strategy);
    let model = ctx.ws.require(Stage::Model)?;
    let spec = StageSpec {
        stage: Stage::Assign,
        command: "assign",
        settings: json!({ "strategy": strategy }),
        inputs: vec![],
        upstream: vec![(Stage::Model, model)],
    };
    ctx.ws.run(spec, |dir| {
        let model = load_model(&ctx.ws.dir(Stage::Model)).map_err(Failure::data)?;
        let assignment = assign(&model, strategy);
        write_json(&dir.join("assignment.json"), &assignment)?;
        let path = dir.join("assignment.csv");
        assignment.write_csv(create(&path)?).data_at(&path)?;
        Ok(format!(
            "{} headlines by {strategy}, {} fell back to the distribution",
            assignment.len(),
            assignment.fallback.len()
        ))
    })
}

pub fn embed(ctx: &Context) -> Outcome<Ran> {
    let model = ctx.ws.require(Stage::Model)?;
    let vectors = ctx.vectors_path()?;
    let top_n = ctx.config.embed.top_n;
    let spec = StageSpec {
        stage: Stage::Embed,
        command: "embed",
        settings: json!({ "top_n": top_n }),
        inputs: vec![vectors.clone()],
        upstream: vec![(Stage::Model, model)],
    };
    ctx.ws.run(spec, |dir| {
        let model = load_model(&ctx.ws.dir(Stage::Model)).map_err(Failure::data)?;
        let store = ctx.vectors_for(&vectors, &model.terms)?;
        let matrix = disparity_matrix(&model.top_words(top_n), &store).map_err(Failure::data)?;
        write_json(&dir.join("disparity.json"), &matrix)?;
        let path = dir.join("disparity_matrix.csv");
        matrix.write_csv(create(&path)?).data_at(&path)?;
        let found: usize = matrix.coverage.iter().map(|c| c.found).sum();
        let total: usize = matrix.coverage.iter().map(|c| c.total).sum();
        Ok(format!("{}x{} disparity matrix, {found} of {total} top words had vectors", matrix.k, matrix.k))
    })
}

pub fn diversity(ctx: &Context) -> Outcome<Ran> {
    let assign = ctx.ws.require(Stage::Assign)?;
    let ingest = ctx.ws.require(Stage::Ingest)?;
    let prep = ctx.ws.require(Stage::Preprocess)?;
    let mut upstream = vec![(Stage::Assign, assign), (Stage::Ingest, ingest), (Stage::Preprocess, prep)];
    let with_disparity = ctx.config.embed.vectors.is_some();
    if with_disparity {
        upstream.push((Stage::Embed, ctx.ws.require(Stage::Embed)?));
    }
    let denominator = ctx.config.diversity.denominator;
    let spec = StageSpec {
        stage: Stage::Diversity,
        command: "diversity",
        settings: json!({ "denominator": denominator, "disparity": with_disparity }),
        inputs: vec![],
        upstream,
    };
    ctx.ws.run(spec, |dir| {
        let sets: Vec<ResultSet> = read_json(&ctx.ws.dir(Stage::Ingest).join("result_sets.json"))?;
        let corpus = ctx.load_corpus()?;
        let assignment: TopicAssignment = read_json(&ctx.ws.dir(Stage::Assign).join("assignment.json"))?;
        let matrix: Option<DisparityMatrix> = if with_disparity {
            Some(read_json(&ctx.ws.dir(Stage::Embed).join("disparity.json"))?)
        } else {
            log::warn!("embed.vectors is not set; disparity is reported absent");
            None
        };
        let topics = HeadlineTopics::new(&corpus, &assignment);
        let options = DiversityOptions {
            denominator: sei_denominator(denominator, assignment.k),
            matrix: matrix.as_ref(),
        };
        let metrics = compute_diversity(&sets, &topics, options).map_err(Failure::data)?;
        write_json(&dir.join("metrics.json"), &metrics)?;
        let path = dir.join("resultset_metrics.csv");
        write_long_csv(&metrics, create(&path)?).data_at(&path)?;
        Ok(format!("metrics for {} result sets", metrics.len()))
    })
}

fn sei_denominator(d: Denominator, k: usize) -> SeiDenominator {
    match d {
        Denominator::TopicsPresent => SeiDenominator::TopicsPresent,
        Denominator::ModelTopics => SeiDenominator::ModelTopics(k),
    }
}

pub fn report(ctx: &Context) -> Outcome<Ran> {
    let cfg = &ctx.config.report;
    let mut upstream = vec![(Stage::Ingest, ctx.ws.require(Stage::Ingest)?)];
    for stage in [Stage::Stats, Stage::Preprocess, Stage::Model, Stage::Assign, Stage::Embed, Stage::Diversity] {
        if let Some(stamp) = ctx.ws.optional(stage)? {
            upstream.push((stage, stamp));
        }
    }
    let have: BTreeSet<Stage> = upstream.iter().map(|u| u.0).collect();
    let denominator = ctx.config.diversity.denominator;
    let spec = StageSpec {
        stage: Stage::Report,
        command: "report",
        settings: json!({ "report": cfg, "denominator": denominator }),
        inputs: vec![],
        upstream,
    };
    ctx.ws.run(spec, |dir| {
        let dir_of = |s: Stage| ctx.ws.dir(s);
        let split: CorpusSplit = read_json(&dir_of(Stage::Ingest).join("split.json"))?;
        let stats = if have.contains(&Stage::Stats) {
            Some(read_json(&dir_of(Stage::Stats).join("collection_stats.json"))?)
        } else {
            None
        };
        let model = if have.contains(&Stage::Model) {
            Some(load_model(&dir_of(Stage::Model)).map_err(Failure::data)?)
        } else {
            None
        };
        let sweep_path = dir_of(Stage::Model).join("sweep.json");
        let sweep: Option<SweepRecord> = if model.is_some() && sweep_path.exists() {
            Some(read_json(&sweep_path)?)
        } else {
            None
        };
        let topics = if have.contains(&Stage::Assign) && have.contains(&Stage::Preprocess) {
            let assignment: TopicAssignment = read_json(&dir_of(Stage::Assign).join("assignment.json"))?;
            Some((HeadlineTopics::new(&ctx.load_corpus()?, &assignment), assignment.k))
        } else {
            None
        };
        let matrix: Option<DisparityMatrix> = if have.contains(&Stage::Embed) {
            Some(read_json(&dir_of(Stage::Embed).join("disparity.json"))?)
        } else {
            None
        };
        let metrics: Option<Vec<newsdiv::ResultSetDiversity>> = if have.contains(&Stage::Diversity) {
            Some(read_json(&dir_of(Stage::Diversity).join("metrics.json"))?)
        } else {
            None
        };
        let excluded: BTreeSet<usize> = cfg.excluded_topics.iter().copied().collect();
        let k = topics.as_ref().map_or(0, |t| t.1);
        let inputs = ReportInputs {
            stats: stats.as_ref(),
            model: model.as_ref(),
            top_n: cfg.top_n,
            sweep: sweep.as_ref().map(|s| s.scores.as_slice()),
            selected_k: sweep.as_ref().map(|s| s.selected_k),
            topics: topics.as_ref().map(|(t, k)| TopicInputs {
                split: &split,
                topics: t,
                k: *k,
                excluded: &excluded,
            }),
            matrix: matrix.as_ref(),
            metrics: metrics.as_deref(),
            aggregate: AggregateOptions {
                degenerate: cfg.degenerate(),
                include_empty: cfg.include_empty,
            },
            denominator: sei_denominator(denominator, k),
        };
        let manifest = export_tables(&inputs, dir).map_err(Failure::data)?;
        Ok(format!("{} tables in {}", manifest.files.len(), ctx.ws.dir(Stage::Report).display()))
    })
}
