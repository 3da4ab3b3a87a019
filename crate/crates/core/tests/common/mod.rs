//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use newsdiv::Corpus;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Corpus whose documents each draw every word from one of `topics`
/// disjoint vocabularies of `terms` words. Returns the corpus and the
/// planted topic of every token.
pub fn planted_corpus(
    topics: usize,
    terms: usize,
    docs: usize,
    doc_len: std::ops::RangeInclusive<usize>,
    seed: u64,
) -> (Corpus, Vec<Vec<usize>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tokens = Vec::with_capacity(docs);
    let mut labels = Vec::with_capacity(docs);
    for d in 0..docs {
        let topic = d % topics;
        let len = rng.gen_range(doc_len.clone());
        let words: Vec<String> = (0..len)
            .map(|_| format!("t{topic}w{}", rng.gen_range(0..terms)))
            .collect();
        tokens.push(words);
        labels.push(vec![topic; len]);
    }
    // shuffle document order so topics are not interleaved regularly
    let mut order: Vec<usize> = (0..docs).collect();
    order.shuffle(&mut rng);
    let tokens: Vec<Vec<String>> = order.iter().map(|&i| tokens[i].clone()).collect();
    let labels: Vec<Vec<usize>> = order.iter().map(|&i| labels[i].clone()).collect();
    (Corpus::from_tokens(&tokens), labels)
}

/// Share of tokens whose fitted topic maps to their planted topic under
/// the best one-to-one relabelling.
pub fn best_permutation_purity(fitted: &[Vec<usize>], planted: &[Vec<usize>], k_fit: usize, k_true: usize) -> f64 {
    let mut table = vec![vec![0usize; k_true]; k_fit];
    let mut total = 0usize;
    for (f, p) in fitted.iter().zip(planted) {
        for (&a, &b) in f.iter().zip(p) {
            table[a][b] += 1;
            total += 1;
        }
    }
    let mut best = 0;
    let mut used = vec![false; k_fit];
    best_match(&table, 0, &mut used, 0, &mut best);
    best as f64 / total as f64
}

fn best_match(table: &[Vec<usize>], col: usize, used: &mut [bool], acc: usize, best: &mut usize) {
    let k_true = table.first().map_or(0, |r| r.len());
    if col == k_true {
        *best = (*best).max(acc);
        return;
    }
    let mut any = false;
    for row in 0..table.len() {
        if !used[row] {
            any = true;
            used[row] = true;
            best_match(table, col + 1, used, acc + table[row][col], best);
            used[row] = false;
        }
    }
    if !any {
        best_match(table, col + 1, used, acc, best);
    }
}

/// Word vectors clustered by planted topic: every `t{topic}w{i}` term sits
/// near a random topic direction, so same-topic terms are highly similar.
pub fn clustered_store(corpus: &Corpus, topics: usize, dim: usize, noise: f64, seed: u64) -> newsdiv::EmbeddingStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..topics)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let mut store = newsdiv::EmbeddingStore::new(dim);
    for term in corpus.vocab.terms() {
        let topic: usize = term[1..term.find('w').unwrap()].parse().unwrap();
        let v: Vec<f64> = centers[topic].iter().map(|c| c + rng.gen_range(-noise..noise)).collect();
        store.insert(term, &v).unwrap();
    }
    store
}

/// Like [`planted_corpus`], but the topics are exchangeable: every
/// document of topic 0 has a twin in each other topic with the same word
/// pattern mapped into that topic's vocabulary.
pub fn exchangeable_corpus(
    topics: usize,
    terms: usize,
    docs_per_topic: usize,
    doc_len: std::ops::RangeInclusive<usize>,
    seed: u64,
) -> (Corpus, Vec<Vec<usize>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let patterns: Vec<Vec<usize>> = (0..docs_per_topic)
        .map(|_| {
            let len = rng.gen_range(doc_len.clone());
            (0..len).map(|_| rng.gen_range(0..terms)).collect()
        })
        .collect();
    let mut docs: Vec<(Vec<String>, Vec<usize>)> = Vec::new();
    for topic in 0..topics {
        for p in &patterns {
            docs.push((p.iter().map(|w| format!("t{topic}w{w}")).collect(), vec![topic; p.len()]));
        }
    }
    docs.shuffle(&mut rng);
    let tokens: Vec<Vec<String>> = docs.iter().map(|d| d.0.clone()).collect();
    (Corpus::from_tokens(&tokens), docs.into_iter().map(|d| d.1).collect())
}

/// A small synthetic crawl: 3 locations, 4 queries, 2 crawl times. Headlines
/// come from a pool built on three planted vocabularies, so some recur across
/// locations and times. One search returns nothing.
pub fn crawl_csv(seed: u64) -> (String, newsdiv::ingest::CategoryMap) {
    use newsdiv::QueryCategory;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let queries = [
        ("Olaf Scholz", QueryCategory::Candidates),
        ("SPD", QueryCategory::EstablishedParties),
        ("Klimapolitik", QueryCategory::PoliticsFields),
        ("Briefwahl", QueryCategory::ElectionGuidance),
    ];
    let mut categories = newsdiv::ingest::CategoryMap::new();
    for (q, c) in queries {
        categories.insert(q, c);
    }
    let vocab = [
        ["wahl", "kanzler", "debatte", "umfrage", "duell"],
        ["klima", "energie", "kohle", "wind", "ausstieg"],
        ["brief", "stimme", "urne", "frist", "wahllokal"],
    ];
    let pool: Vec<String> = (0..45)
        .map(|i| {
            let words = &vocab[i % 3];
            let len = rng.gen_range(3..=5);
            let mut w: Vec<&str> = (0..len).map(|_| words[rng.gen_range(0..5)]).collect();
            w.push(["heute", "neu", "live"][i % 3]);
            format!("{} {}", w.join(" "), i)
        })
        .collect();
    let sources = ["Spiegel", "Zeit", "Tagesschau", "FAZ", "taz", "Welt"];
    let ages = ["vor 2 Stunden", "vor 1 Tag", "vor 3 Tagen", "vor 30 Minuten", "vor 5 Tagen"];
    let mut out = String::from("Location,Search query,Timestamp,Rank,Published,Title,Source\n");
    for loc in ["MU", "HH", "B"] {
        for ts in ["21-09-12_00:00:44", "21-09-13_12:30:00"] {
            for (qi, (q, _)) in queries.iter().enumerate() {
                if loc == "HH" && qi == 3 && ts.starts_with("21-09-13") {
                    out.push_str(&format!("{loc},{q},{ts},,,,\n"));
                    continue;
                }
                let n = rng.gen_range(1..=6);
                let mut picks: Vec<usize> = (0..pool.len()).collect();
                picks.shuffle(&mut rng);
                for (rank, &p) in picks[..n].iter().enumerate() {
                    out.push_str(&format!(
                        "{loc},{q},{ts},{},{},\"{}\",{}\n",
                        rank + 1,
                        ages[rng.gen_range(0..ages.len())],
                        pool[p],
                        sources[rng.gen_range(0..sources.len())]
                    ));
                }
            }
        }
    }
    (out, categories)
}

/// Seeded random vectors for every term of `corpus`.
pub fn random_store(corpus: &Corpus, dim: usize, seed: u64) -> newsdiv::EmbeddingStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = newsdiv::EmbeddingStore::new(dim);
    for term in corpus.vocab.terms() {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        store.insert(term, &v).unwrap();
    }
    store
}
