//! Acceptance suite. Prints one PASS, FAIL or SKIP line per criterion and
//! exits non-zero if anything failed.
//!
//! Criteria 9 to 11 need the published crawl. Point `NEWSDIV_PUBLISHED_CORPUS`
//! at the Top Stories result file and `NEWSDIV_CATEGORY_MAP` at the
//! `query<TAB>category` map. Criterion 10 also reads the two control crawls
//! from `NEWSDIV_GOOGLE_NEWS` and `NEWSDIV_BING_NEWS`. `NEWSDIV_DELIMITER`
//! overrides the default comma.

mod common;

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use newsdiv::diversity::{resultset_disparity, set_diversity, shannon_evenness, write_long_csv, DiversityOptions};
use newsdiv::embeddings::{disparity_matrix, TopicEmbedding, Coverage};
use newsdiv::ingest::{collection_stats, parse_records, result_sets, split_corpus, CategoryMap, CorpusSplit};
use newsdiv::report::{aggregate, AggregateOptions, GroupBy, MetricKind};
use newsdiv::topicmodel::{
    fit_gpu_pdmm, fit_lda, select_best, sweep_select, CountTables, ModelConfig, SweepScore, TopicModel,
};
use newsdiv::{
    assign::majority_topic, assign_from_distribution, DisparityMatrix, EmbeddingStore, HeadlineTopics, Measure,
    QueryCategory, ResultSet, SeiDenominator, TopicDistribution,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Outcome::{Fail, Pass, Skip};

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Fail(format!($($msg)+));
        }
    };
}

/// Entropy as `ln N - (1/N) sum c ln c`, summed with Neumaier compensation.
fn reference_evenness(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let present = counts.iter().filter(|&&c| c > 0).count();
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &c in counts.iter().filter(|&&c| c > 0) {
        let x = c as f64 * (c as f64).ln();
        let t = sum + x;
        comp += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    let n = total as f64;
    (n.ln() - (sum + comp) / n) / (present as f64).ln()
}

fn distribution(counts: &[u64]) -> TopicDistribution {
    TopicDistribution::from_counts(counts.iter().enumerate().map(|(t, &c)| (t, c)))
}

fn metric_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut checked = 0;
    while checked < 1000 {
        let len = rng.gen_range(2..=30);
        let counts: Vec<u64> = (0..len)
            .map(|_| if rng.gen_bool(0.2) { 0 } else { rng.gen_range(1..=500) })
            .collect();
        if counts.iter().filter(|&&c| c > 0).count() < 2 {
            continue;
        }
        let got = shannon_evenness(&distribution(&counts), SeiDenominator::TopicsPresent).unwrap();
        let Measure::Value(got) = got else {
            return Fail(format!("{counts:?} gave {got:?}"));
        };
        worst = worst.max((got - reference_evenness(&counts)).abs());
        checked += 1;
    }
    ensure!(worst < 1e-9, "max error {worst:e}");
    for counts in [vec![5u64, 5], vec![3, 3, 3, 3], vec![7; 9]] {
        let got = shannon_evenness(&distribution(&counts), SeiDenominator::TopicsPresent).unwrap();
        ensure!(got == Measure::Value(1.0), "uniform {counts:?} gave {got:?}");
    }
    for counts in [vec![4u64], vec![0, 9, 0]] {
        let got = shannon_evenness(&distribution(&counts), SeiDenominator::TopicsPresent).unwrap();
        ensure!(got == Measure::Degenerate, "single topic {counts:?} gave {got:?}");
    }
    Pass(format!("1000 vectors, max error {worst:.1e}; uniform and single-topic exact"))
}

fn random_matrix(rng: &mut ChaCha8Rng, k: usize) -> DisparityMatrix {
    let mut values = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let d = rng.gen_range(0.0..2.0);
            values[i][j] = d;
            values[j][i] = d;
        }
    }
    DisparityMatrix {
        k,
        values,
        coverage: vec![Coverage { found: 1, total: 1 }; k],
        embeddings: vec![vec![]; k],
    }
}

fn disparity_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let k = rng.gen_range(1..=15);
        let m = random_matrix(&mut rng, k);
        let n = rng.gen_range(2..=10);
        let topics: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let got = resultset_disparity(&topics, &m).unwrap().unwrap();
        let mut pairs = Vec::new();
        for a in 0..n {
            for b in 0..n {
                if a < b {
                    pairs.push(m.values[topics[a]][topics[b]]);
                }
            }
        }
        let brute = pairs.iter().sum::<f64>() / pairs.len() as f64;
        worst = worst.max((got - brute).abs());

        let single = vec![rng.gen_range(0..k); n];
        let d = resultset_disparity(&single, &m).unwrap();
        ensure!(d == Some(0.0), "single-topic set {single:?} gave {d:?}");
    }
    ensure!(worst < 1e-12, "max error {worst:e}");
    Pass(format!("1000 sets, max error {worst:.1e}; single-topic sets exactly 0"))
}

fn matrix_structure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for round in 0..100 {
        let dim = rng.gen_range(2..=12);
        let words = rng.gen_range(5..=40);
        let mut store = EmbeddingStore::new(dim);
        for w in 0..words {
            let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            store.insert(&format!("w{w}"), &v).unwrap();
        }
        let k = rng.gen_range(2..=12);
        let top: Vec<Vec<String>> = (0..k)
            .map(|_| (0..rng.gen_range(1..=10)).map(|_| format!("w{}", rng.gen_range(0..words))).collect())
            .collect();
        let m = disparity_matrix(&top, &store).unwrap();
        for i in 0..k {
            ensure!(m.values[i][i] == 0.0, "store {round}: diagonal {i} is {}", m.values[i][i]);
            for j in 0..k {
                ensure!(m.values[i][j] == m.values[j][i], "store {round}: ({i},{j}) not symmetric");
                ensure!((0.0..=2.0).contains(&m.values[i][j]), "store {round}: ({i},{j}) = {}", m.values[i][j]);
            }
        }
    }
    let hand = DisparityMatrix::from_embeddings(vec![
        TopicEmbedding { vector: vec![1.0, 0.0], coverage: Coverage { found: 1, total: 1 } },
        TopicEmbedding { vector: vec![0.6, 0.8], coverage: Coverage { found: 1, total: 1 } },
    ])
    .unwrap();
    ensure!((hand.values[0][1] - 0.4).abs() < 1e-12, "hand example gave {}", hand.values[0][1]);
    Pass("100 random stores symmetric, zero diagonal, in [0,2]; (1,0) vs (0.6,0.8) = 0.4".into())
}

fn sampler_determinism() -> Outcome {
    let (corpus, _) = common::planted_corpus(3, 10, 80, 3..=8, 4);
    let store = common::clustered_store(&corpus, 3, 8, 0.3, 4);
    let lda = |seed| fit_lda(&corpus, &ModelConfig::lda(3).with_seed(seed).with_iterations(30)).unwrap();
    let gpu =
        |seed| fit_gpu_pdmm(&corpus, &ModelConfig::gpu_pdmm(3).with_seed(seed).with_iterations(30), &store).unwrap();
    let (a, b) = (lda(9), lda(9));
    ensure!(a.word_assignments == b.word_assignments && a.counts == b.counts, "LDA runs with one seed differ");
    ensure!(a.word_assignments != lda(10).word_assignments, "LDA ignores its seed");
    let (a, b) = (gpu(9), gpu(9));
    ensure!(
        a.word_assignments == b.word_assignments && a.counts == b.counts && a.doc_topic_sets == b.doc_topic_sets,
        "GPU-PDMM runs with one seed differ"
    );
    ensure!(a.word_assignments != gpu(10).word_assignments, "GPU-PDMM ignores its seed");
    Pass("LDA and GPU-PDMM bit-identical per seed, different across seeds".into())
}

fn planted_recovery() -> Outcome {
    let mut lda_ok = 0;
    let mut gpu_ok = 0;
    let mut lowest = (1.0f64, 1.0f64);
    for seed in 0..20 {
        let (corpus, planted) = common::planted_corpus(2, 20, 200, 6..=10, seed);
        let lda = fit_lda(&corpus, &ModelConfig::lda(2).with_seed(seed).with_iterations(200)).unwrap();
        let p = common::best_permutation_purity(&lda.word_assignments, &planted, 2, 2);
        lowest.0 = lowest.0.min(p);
        lda_ok += usize::from(p >= 0.95);

        let store = common::clustered_store(&corpus, 2, 16, 1.0, seed);
        let mut config = ModelConfig::gpu_pdmm(2).with_seed(seed).with_iterations(200);
        config.gpu.max_topics_per_doc = 1;
        let gpu = fit_gpu_pdmm(&corpus, &config, &store).unwrap();
        let p = common::best_permutation_purity(&gpu.word_assignments, &planted, 2, 2);
        lowest.1 = lowest.1.min(p);
        gpu_ok += usize::from(p >= 0.95);
    }
    ensure!(lda_ok >= 19 && gpu_ok >= 19, "purity >= 0.95 on LDA {lda_ok}/20, GPU-PDMM {gpu_ok}/20 seeds");
    Pass(format!(
        "purity >= 0.95 on LDA {lda_ok}/20 (min {:.3}), GPU-PDMM {gpu_ok}/20 (min {:.3})",
        lowest.0, lowest.1
    ))
}

fn sweep_selection() -> Outcome {
    let ks: Vec<usize> = (2..=8).collect();
    let mut picked = Vec::new();
    for seed in 0..4 {
        let (corpus, _) = common::exchangeable_corpus(3, 10, 100, 6..=10, seed);
        let store = common::clustered_store(&corpus, 3, 16, 1.0, seed);
        let gpu = ModelConfig::gpu_pdmm(3).with_seed(seed).with_iterations(200);
        let lda = ModelConfig::lda(3).with_seed(seed).with_iterations(200);
        for (name, base, store) in [("GPU-PDMM", gpu, Some(&store)), ("LDA", lda, None)] {
            let out = sweep_select(&corpus, &base, &ks, store, 10, None).unwrap();
            ensure!(
                (3..=5).contains(&out.selected_k),
                "{name} seed {seed} selected K={} ({:?})",
                out.selected_k,
                out.scores
            );
            picked.push(out.selected_k);
        }
    }
    let tie = [
        SweepScore { k: 3, coherence: Some(0.1) },
        SweepScore { k: 4, coherence: Some(0.3) },
        SweepScore { k: 5, coherence: Some(0.3) },
    ];
    ensure!(select_best(&tie) == Some(4), "tie case selected {:?}", select_best(&tie));
    Pass(format!("selected K {picked:?} over 2..8; tie (4, 5) resolves to 4"))
}

fn tie_breaks() -> Outcome {
    let model = TopicModel {
        config: ModelConfig::lda(3),
        terms: vec![],
        phi: vec![vec![]; 3],
        doc_topic_dist: vec![vec![0.4, 0.4, 0.2]],
        word_assignments: vec![vec![1, 3]],
        doc_topic_sets: None,
        counts: CountTables { k: 3, v: 0, topic_word: vec![], promotions: vec![] },
    };
    let by_dist = assign_from_distribution(&model).topics[0];
    ensure!(by_dist == 0, "distribution (0.4,0.4,0.2) gave topic {by_dist}");
    let forward = majority_topic(&[1, 3], 4);
    let backward = majority_topic(&[3, 1], 4);
    ensure!(forward == Some(1) && backward == Some(1), "word majority (1,3) gave {forward:?} / {backward:?}");
    Pass("distribution (0.4,0.4,0.2) -> 0; word-majority tie between 1 and 3 -> 1".into())
}

fn degenerate_handling() -> Outcome {
    let (csv, categories) = common::crawl_csv(5);
    let parsed = parse_records(csv.as_bytes(), b',', &categories).unwrap();
    let sets = result_sets(&parsed.records, &parsed.empty_searches).unwrap();
    let single: ResultSet = {
        let mut s = sets.iter().find(|s| s.len() >= 2).unwrap().clone();
        s.records.truncate(1);
        s.key.location = "solo".into();
        s
    };
    let empty = sets.iter().find(|s| s.is_empty()).unwrap().clone();
    let full = sets.iter().find(|s| s.len() >= 3).unwrap().clone();
    let titles: BTreeSet<String> = sets.iter().flat_map(|s| &s.records).map(|r| r.title.clone()).collect();
    let topics = HeadlineTopics::from_pairs(titles.iter().enumerate().map(|(i, t)| (t.as_str(), i % 3)));
    let matrix = DisparityMatrix {
        k: 3,
        values: vec![vec![0.0, 0.5, 1.0], vec![0.5, 0.0, 0.7], vec![1.0, 0.7, 0.0]],
        coverage: vec![Coverage { found: 1, total: 1 }; 3],
        embeddings: vec![vec![]; 3],
    };
    let options = DiversityOptions { denominator: SeiDenominator::TopicsPresent, matrix: Some(&matrix) };
    let metrics: Vec<_> = [&single, &empty, &full]
        .into_iter()
        .map(|s| set_diversity(s, &topics, options).unwrap())
        .collect();
    ensure!(
        metrics[0].sei == Measure::Degenerate && metrics[0].disparity == Measure::Degenerate,
        "n=1 gave sei {:?}, disparity {:?}",
        metrics[0].sei,
        metrics[0].disparity
    );
    ensure!(
        metrics[1].sei == Measure::Absent && metrics[1].disparity == Measure::Absent,
        "n=0 gave sei {:?}, disparity {:?}",
        metrics[1].sei,
        metrics[1].disparity
    );

    let mut buf = Vec::new();
    write_long_csv(&metrics, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    for line in text.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let (value, flag) = (cells[cells.len() - 2], cells[cells.len() - 1]);
        let consistent = match flag {
            "ok" => value.parse::<f64>().is_ok(),
            "degenerate" | "absent" => value.is_empty(),
            _ => false,
        };
        ensure!(consistent, "row `{line}` mixes a sentinel and a number");
    }

    // every set shares a category so they land in one group
    let mut grouped = metrics.clone();
    for m in &mut grouped {
        m.category = QueryCategory::Candidates;
    }
    let rows = aggregate(&grouped, GroupBy::Category, MetricKind::Sei, AggregateOptions::default()).unwrap();
    let row = &rows[0];
    let full_sei = metrics[2].sei.value();
    ensure!(
        row.n_result_sets == 3 && row.n_excluded == 2 && row.stats.map(|s| s.mean) == full_sei,
        "aggregate gave {row:?}"
    );
    let rows = aggregate(&grouped, GroupBy::Category, MetricKind::Disparity, AggregateOptions::default()).unwrap();
    ensure!(rows[0].n_excluded == 2, "disparity aggregate gave {:?}", rows[0]);
    Pass("n=1 degenerate, n=0 absent, no numeric sentinels; aggregation excluded 2 of 3 and counted them".into())
}

struct Published {
    split: CorpusSplit,
    sets: Vec<ResultSet>,
    elapsed: Duration,
}

fn env_path(name: &str) -> Option<PathBuf> {
    std::env::var_os(name).map(PathBuf::from).filter(|p| !p.as_os_str().is_empty())
}

fn delimiter() -> u8 {
    std::env::var("NEWSDIV_DELIMITER")
        .ok()
        .and_then(|d| d.bytes().next())
        .unwrap_or(b',')
}

fn load_crawl(path: &PathBuf, categories: &CategoryMap) -> Result<(CorpusSplit, Vec<ResultSet>), String> {
    let file = std::fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let parsed = parse_records(std::io::BufReader::new(file), delimiter(), categories)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let sets = result_sets(&parsed.records, &parsed.empty_searches).map_err(|e| e.to_string())?;
    Ok((split_corpus(&parsed.records), sets))
}

fn categories() -> Result<Option<CategoryMap>, String> {
    let Some(path) = env_path("NEWSDIV_CATEGORY_MAP") else {
        return Ok(None);
    };
    let file = std::fs::File::open(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    CategoryMap::from_reader(std::io::BufReader::new(file))
        .map(Some)
        .map_err(|e| e.to_string())
}

fn load_published() -> Result<Option<Published>, String> {
    let (Some(path), Some(categories)) = (env_path("NEWSDIV_PUBLISHED_CORPUS"), categories()?) else {
        return Ok(None);
    };
    let start = Instant::now();
    let (split, sets) = load_crawl(&path, &categories)?;
    Ok(Some(Published { split, sets, elapsed: start.elapsed() }))
}

const NO_CORPUS: &str = "published corpus not supplied (set NEWSDIV_PUBLISHED_CORPUS and NEWSDIV_CATEGORY_MAP)";

fn ingest_totals(data: &Result<Option<Published>, String>) -> Outcome {
    let data = match data {
        Err(e) => return Fail(e.clone()),
        Ok(None) => return Skip(NO_CORPUS.into()),
        Ok(Some(d)) => d,
    };
    let start = Instant::now();
    let stats = match collection_stats("Top Stories", &data.split, &data.sets, &[]) {
        Ok(s) => s,
        Err(e) => return Fail(e.to_string()),
    };
    let elapsed = data.elapsed + start.elapsed();
    let expected = [52.6, 24.2, 9.5, 9.9, 3.8];
    let aged: usize = stats.ages.iter().map(|b| b.count).sum();
    ensure!(aged == 25_802, "{aged} aged records, expected 25,802");
    for (bucket, want) in stats.ages.iter().zip(expected) {
        ensure!(
            (bucket.percent - want).abs() <= 0.2,
            "bucket {} at {:.2}%, expected {want}%",
            bucket.label,
            bucket.percent
        );
    }
    ensure!(stats.unique_headlines >= 26_000, "{} unique headlines", stats.unique_headlines);
    ensure!(stats.outlets > 900, "{} outlets", stats.outlets);
    ensure!(elapsed < Duration::from_secs(120), "ingest took {elapsed:?}");
    Pass(format!(
        "{aged} aged records, {} unique headlines, {} outlets in {:.1?}",
        stats.unique_headlines, stats.outlets, elapsed
    ))
}

fn overlap(data: &Result<Option<Published>, String>) -> Outcome {
    let data = match data {
        Err(e) => return Fail(e.clone()),
        Ok(None) => return Skip(NO_CORPUS.into()),
        Ok(Some(d)) => d,
    };
    let (Some(google), Some(bing)) = (env_path("NEWSDIV_GOOGLE_NEWS"), env_path("NEWSDIV_BING_NEWS")) else {
        return Skip("control crawls not supplied (set NEWSDIV_GOOGLE_NEWS and NEWSDIV_BING_NEWS)".into());
    };
    let categories = match categories() {
        Ok(Some(c)) => c,
        Ok(None) => return Skip(NO_CORPUS.into()),
        Err(e) => return Fail(e),
    };
    let mut controls = Vec::new();
    for (name, path) in [("Google News", google), ("Bing News", bing)] {
        match load_crawl(&path, &categories) {
            Ok((split, _)) => controls.push((name.to_string(), split)),
            Err(e) => return Fail(e),
        }
    }
    let stats = match collection_stats("Top Stories", &data.split, &data.sets, &controls) {
        Ok(s) => s,
        Err(e) => return Fail(e.to_string()),
    };
    let matrix = stats.overlap.expect("controls were given");
    let expected = [
        ("Top Stories", "Google News", 42.2),
        ("Top Stories", "Bing News", 12.8),
        ("Google News", "Top Stories", 50.8),
        ("Google News", "Bing News", 14.7),
        ("Bing News", "Top Stories", 30.8),
        ("Bing News", "Google News", 29.6),
    ];
    let mut seen = Vec::new();
    for (a, b, want) in expected {
        let Some(got) = matrix.get(a, b) else {
            return Fail(format!("({a}, {b}) undefined"));
        };
        ensure!((got - want).abs() <= 2.0, "({a}, {b}) = {got:.1}%, expected {want}%");
        seen.push(format!("{got:.1}"));
    }
    Pass(format!("all six cells within 2 points: {}", seen.join(" / ")))
}

fn location_coverage(data: &Result<Option<Published>, String>) -> Outcome {
    let data = match data {
        Err(e) => return Fail(e.clone()),
        Ok(None) => return Skip(NO_CORPUS.into()),
        Ok(Some(d)) => d,
    };
    let stats = match collection_stats("Top Stories", &data.split, &data.sets, &[]) {
        Ok(s) => s,
        Err(e) => return Fail(e.to_string()),
    };
    let share = stats.locations.share(8);
    ensure!(share > 0.70, "{:.1}% of headlines seen at all 8 locations", 100.0 * share);
    Pass(format!("{:.1}% of headlines seen at all 8 locations", 100.0 * share))
}

fn main() {
    let published = load_published();
    let checks: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("evenness matches reference evaluation", Box::new(metric_oracle)),
        ("set disparity equals pair enumeration", Box::new(disparity_equivalence)),
        ("disparity matrix structure", Box::new(matrix_structure)),
        ("sampler determinism", Box::new(sampler_determinism)),
        ("planted topic recovery", Box::new(planted_recovery)),
        ("coherence sweep selection", Box::new(sweep_selection)),
        ("assignment tie-breaks", Box::new(tie_breaks)),
        ("degenerate result sets", Box::new(degenerate_handling)),
        ("ingest totals on the published crawl", Box::new(|| ingest_totals(&published))),
        ("overlap against control crawls", Box::new(|| overlap(&published))),
        ("location coverage", Box::new(|| location_coverage(&published))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check))
            .unwrap_or_else(|_| Fail("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Skip(d) => ("SKIP", d),
        };
        println!("criterion {:>2} {tag}: {name} ({secs:.1}s): {detail}", i + 1);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
