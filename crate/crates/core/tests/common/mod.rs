// Independent oracles and fixtures shared by the integration tests. Nothing
// here calls into the library's scoring, fusion or metric code.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;

use proptest::prelude::*;
use venuerec::corpus::{Article, Corpus};
use venuerec::index::{FieldWeights, RankedDoc, RankedList};
use venuerec::profile::{Subprofile, TermBag};
use venuerec::textprep::DocVector;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

/// `(label, point)` rows of the planted-centroid fixture.
pub fn planted_points() -> Vec<(usize, Vec<f64>)> {
    std::fs::read_to_string(fixture("planted_centroids.tsv"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let (lab, xs) = l.split_once('\t').unwrap();
            (
                lab.parse().unwrap(),
                xs.split_whitespace().map(|x| x.parse().unwrap()).collect(),
            )
        })
        .collect()
}

pub fn dense_to_vector(id: String, x: &[f64]) -> DocVector {
    DocVector {
        article_id: id,
        entries: x
            .iter()
            .enumerate()
            .filter(|(_, &w)| w != 0.0)
            .map(|(j, &w)| (j as u32, w))
            .collect(),
    }
}

pub fn to_dense(v: &DocVector, dim: usize) -> Vec<f64> {
    let mut x = vec![0.0; dim];
    for &(j, w) in &v.entries {
        x[j as usize] = w;
    }
    x
}

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn choose2(n: usize) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index from the contingency table.
pub fn adjusted_rand(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut table: HashMap<(usize, usize), usize> = HashMap::new();
    let mut rows: HashMap<usize, usize> = HashMap::new();
    let mut cols: HashMap<usize, usize> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&n| choose2(n)).sum();
    let sum_a: f64 = rows.values().map(|&n| choose2(n)).sum();
    let sum_b: f64 = cols.values().map(|&n| choose2(n)).sum();
    let expected = sum_a * sum_b / choose2(a.len());
    let max = (sum_a + sum_b) / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

fn field_bag(p: &Subprofile, f: usize) -> &TermBag {
    match f {
        0 => &p.content,
        1 => &p.keywords,
        _ => &p.authors,
    }
}

/// Exhaustive JM scoring of every profile straight from the raw bags.
pub fn brute_scores(
    profiles: &[Subprofile],
    query: [&TermBag; 3],
    weights: FieldWeights,
    lambda_s: f64,
) -> Vec<(String, f64)> {
    let w = [weights.content, weights.keywords, weights.authors];
    let mut coll_len = [0u64; 3];
    let mut cf: [HashMap<&str, u64>; 3] = Default::default();
    for p in profiles {
        for f in 0..3 {
            for (t, &n) in field_bag(p, f) {
                coll_len[f] += u64::from(n);
                *cf[f].entry(t.as_str()).or_default() += u64::from(n);
            }
        }
    }
    profiles
        .iter()
        .map(|p| {
            let mut total = 0.0;
            for f in 0..3 {
                if w[f] == 0.0 {
                    continue;
                }
                let bag = field_bag(p, f);
                let len: u64 = bag.values().map(|&n| u64::from(n)).sum();
                let mut s = 0.0;
                for (t, &q) in query[f] {
                    let Some(&tf) = bag.get(t) else { continue };
                    let p_doc = f64::from(tf) / len as f64;
                    let p_coll = cf[f][t.as_str()] as f64 / coll_len[f] as f64;
                    s += f64::from(q) * (1.0 + (1.0 - lambda_s) * p_doc / (lambda_s * p_coll)).ln();
                }
                total += w[f] * s;
            }
            (p.doc_id.clone(), total)
        })
        .collect()
}

/// Positive scores, sorted by score desc then doc_id asc, cut to `top_n`.
pub fn brute_ranking(mut scores: Vec<(String, f64)>, top_n: usize) -> Vec<(String, f64)> {
    scores.retain(|(_, s)| *s > 0.0);
    scores.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scores.truncate(top_n);
    scores
}

/// CombLgDCS straight from its definition: per venue, the maximum score
/// (earliest position on ties) plus every other document's score divided by
/// log2(position + 1).
pub fn brute_lgdcs(ranked: &[(String, f64)], venue_of: &HashMap<String, String>) -> Vec<(String, f64)> {
    let mut per_venue: BTreeMap<&str, Vec<(usize, f64)>> = BTreeMap::new();
    for (i, (doc, s)) in ranked.iter().enumerate() {
        if let Some(v) = venue_of.get(doc) {
            per_venue.entry(v).or_default().push((i + 1, *s));
        }
    }
    let mut out: Vec<(String, f64)> = per_venue
        .into_iter()
        .map(|(v, docs)| {
            let mut best = 0;
            for (i, d) in docs.iter().enumerate() {
                if d.1 > docs[best].1 {
                    best = i;
                }
            }
            let rest: f64 = docs
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != best)
                .map(|(_, &(pos, s))| s / ((pos + 1) as f64).log2())
                .sum();
            (v.to_string(), docs[best].1 + rest)
        })
        .collect();
    out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    out
}

pub fn brute_normalize(r: &[(String, f64)]) -> Vec<(String, f64)> {
    let max = r.iter().map(|x| x.1).fold(0.0, f64::max);
    if max <= 0.0 {
        return r.to_vec();
    }
    r.iter().map(|(v, s)| (v.clone(), s / max)).collect()
}

pub fn brute_linear(c: &[(String, f64)], a: &[(String, f64)], lambda: f64) -> Vec<(String, f64)> {
    let mut venues: Vec<&String> = c.iter().chain(a).map(|x| &x.0).collect();
    venues.sort();
    venues.dedup();
    let get = |r: &[(String, f64)], v: &str| r.iter().find(|x| x.0 == v).map_or(0.0, |x| x.1);
    let mut out: Vec<(String, f64)> = venues
        .into_iter()
        .map(|v| (v.clone(), lambda * get(c, v) + (1.0 - lambda) * get(a, v)))
        .filter(|x| x.1 > 0.0)
        .collect();
    out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    out
}

pub fn acc_oracle(ranks: &[Option<usize>], x: usize) -> f64 {
    ranks.iter().filter(|r| r.is_some_and(|r| r <= x)).count() as f64 / ranks.len() as f64
}

pub fn mrr_oracle(ranks: &[Option<usize>], cutoff: usize) -> f64 {
    ranks
        .iter()
        .map(|r| match r {
            Some(r) if *r <= cutoff => 1.0 / *r as f64,
            _ => 0.0,
        })
        .sum::<f64>()
        / ranks.len() as f64
}

pub fn ranked_list(rows: &[(String, f64)]) -> RankedList {
    RankedList {
        entries: rows
            .iter()
            .enumerate()
            .map(|(i, (d, s))| RankedDoc {
                doc_id: d.clone(),
                score: *s,
                position: i + 1,
            })
            .collect(),
    }
}

/// Random ranked document list (≤ `max_docs` docs over ≤ `max_venues`
/// venues), already sorted, plus its doc → venue map. Scores are drawn from
/// a small grid so ties occur.
pub fn random_ranked(
    rng: &mut impl rand::Rng,
    max_docs: usize,
    max_venues: usize,
) -> (Vec<(String, f64)>, HashMap<String, String>) {
    let n_docs = rng.random_range(1..=max_docs);
    let n_venues = rng.random_range(1..=max_venues);
    let mut venue_of = HashMap::new();
    let mut rows = Vec::with_capacity(n_docs);
    for d in 0..n_docs {
        let doc = format!("d{d:04}");
        venue_of.insert(doc.clone(), format!("v{:02}", rng.random_range(0..n_venues)));
        let score = if rng.random_bool(0.3) {
            f64::from(rng.random_range(1..20u32)) / 4.0
        } else {
            rng.random_range(0.01..50.0)
        };
        rows.push((doc, score));
    }
    rows.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    (rows, venue_of)
}

pub fn article(id: &str, venue: &str, year: i32, text: &str, keywords: &[&str], authors: &[&str]) -> Article {
    Article {
        article_id: id.to_string(),
        venue_id: venue.to_string(),
        year,
        title_abstract: text.to_string(),
        keywords: keywords.iter().map(|s| s.to_string()).collect(),
        authors: authors.iter().map(|s| s.to_string()).collect(),
    }
}

const WORDS: &[&str] = &[
    "graph",
    "neural",
    "retrieval",
    "cluster",
    "venue",
    "ranking",
    "protein",
    "sensor",
    "query",
    "kernel",
    "fusion",
    "market",
    "energy",
    "robot",
    "vision",
    "speech",
    "theorem",
    "lattice",
    "privacy",
    "storage",
];

prop_compose! {
    pub fn arb_article(max_venues: usize)(
        venue in 0..max_venues,
        year in 2010i32..2017,
        words in prop::collection::vec(prop::sample::select(WORDS), 1..12),
        kw in prop::collection::vec(prop::sample::select(WORDS), 0..3),
        authors in prop::collection::btree_set(0u32..15, 0..4),
    ) -> (String, i32, String, Vec<String>, Vec<String>) {
        (
            format!("venue{venue}"),
            year,
            words.join(" "),
            kw.iter().map(|s| s.to_string()).collect(),
            authors.iter().map(|a| format!("0000-0002-0000-{a:04}")).collect(),
        )
    }
}

/// Random valid corpus with unique ids.
pub fn arb_corpus(max_articles: usize, max_venues: usize) -> impl Strategy<Value = Corpus> {
    prop::collection::vec(arb_article(max_venues), 1..max_articles).prop_map(|rows| {
        let articles = rows
            .into_iter()
            .enumerate()
            .map(|(i, (venue_id, year, title_abstract, keywords, authors))| Article {
                article_id: format!("a{i:04}"),
                venue_id,
                year,
                title_abstract,
                keywords,
                authors,
            })
            .collect();
        Corpus::new(articles).unwrap()
    })
}

fn arb_bag(vocab: usize, max_terms: usize) -> impl Strategy<Value = TermBag> {
    prop::collection::btree_map((0..vocab).prop_map(|t| format!("t{t}")), 1u32..6, 0..max_terms)
}

/// Random subprofiles with unique doc ids over a small shared vocabulary.
pub fn arb_profiles(max_docs: usize) -> impl Strategy<Value = Vec<Subprofile>> {
    prop::collection::vec((0usize..6, arb_bag(12, 8), arb_bag(6, 3), arb_bag(8, 3)), 1..max_docs).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (venue, content, keywords, authors))| Subprofile {
                doc_id: format!("v{venue}#{i:04}"),
                venue_id: format!("v{venue}"),
                cluster_id: None,
                content,
                keywords,
                authors,
                n_articles: 1,
            })
            .collect()
    })
}

pub fn arb_query() -> impl Strategy<Value = [TermBag; 3]> {
    (arb_bag(14, 5), arb_bag(7, 3), arb_bag(9, 3)).prop_map(|(c, k, a)| [c, k, a])
}
