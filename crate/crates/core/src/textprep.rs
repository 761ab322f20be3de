//! Tokenization, stemming, vocabulary pruning and document vectors for
//! clustering.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rust_stemmers::{Algorithm, Stemmer};

use crate::error::{Error, Result};

const DEFAULT_STOPWORDS: &str = include_str!("stopwords_en.txt");

/// Lowercases, splits on non-alphanumerics, drops stopwords and one-char
/// tokens, then applies the English (Porter2) stemmer.
pub struct Analyzer {
    stopwords: HashSet<String>,
    stemmer: Stemmer,
}

impl std::fmt::Debug for Analyzer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Analyzer")
            .field("stopwords", &self.stopwords.len())
            .finish()
    }
}

impl Default for Analyzer {
    fn default() -> Self {
        Self::new(default_stopwords())
    }
}

impl Analyzer {
    pub fn new(stopwords: HashSet<String>) -> Self {
        Self {
            stopwords,
            stemmer: Stemmer::create(Algorithm::English),
        }
    }

    /// Reads a stopword file, one word per line. Blank lines and `#` comments
    /// are ignored.
    pub fn from_stopword_file(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut words = HashSet::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let w = line.trim();
            if !w.is_empty() && !w.starts_with('#') {
                words.insert(w.to_lowercase());
            }
        }
        Ok(Self::new(words))
    }

    pub fn tokenize_and_stem(&self, text: &str) -> Vec<String> {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|tok| tok.chars().nth(1).is_some())
            .map(str::to_lowercase)
            .filter(|tok| !self.stopwords.contains(tok))
            .map(|tok| self.stemmer.stem(&tok).into_owned())
            .collect()
    }

    /// Tokens of every keyword phrase, concatenated.
    pub fn keyword_tokens(&self, keywords: &[String]) -> Vec<String> {
        keywords.iter().flat_map(|k| self.tokenize_and_stem(k)).collect()
    }
}

pub fn default_stopwords() -> HashSet<String> {
    DEFAULT_STOPWORDS
        .lines()
        .map(str::trim)
        .filter(|w| !w.is_empty())
        .map(String::from)
        .collect()
}

/// Free-function form of [`Analyzer::tokenize_and_stem`].
pub fn tokenize_and_stem(text: &str, stopwords: &HashSet<String>) -> Vec<String> {
    Analyzer::new(stopwords.clone()).tokenize_and_stem(text)
}

/// Pruned clustering vocabulary with dense, lexicographically ordered ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    ids: HashMap<String, u32>,
    df: Vec<usize>,
    n_docs: usize,
}

impl Vocabulary {
    fn from_sorted(terms: Vec<(String, usize)>, n_docs: usize) -> Self {
        let ids = terms
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (t.clone(), i as u32))
            .collect();
        let (terms, df) = terms.into_iter().unzip();
        Self { terms, ids, df, n_docs }
    }

    /// Vocabulary size t.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of documents the frequencies were counted over (m).
    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn id(&self, term: &str) -> Option<u32> {
        self.ids.get(term).copied()
    }

    pub fn term(&self, id: u32) -> &str {
        &self.terms[id as usize]
    }

    pub fn df(&self, id: u32) -> usize {
        self.df[id as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.terms.iter().map(String::as_str).zip(self.df.iter().copied())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let res = (|| {
            writeln!(w, "# n_docs\t{}", self.n_docs)?;
            for (term, df) in self.iter() {
                writeln!(w, "{term}\t{df}")?;
            }
            w.flush()
        })();
        res.map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let parse_err = |line: usize, reason: &str| Error::Parse {
            path: path.to_path_buf(),
            line,
            reason: reason.to_string(),
        };
        let mut n_docs = None;
        let mut terms = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if let Some(rest) = line.strip_prefix("# n_docs\t") {
                n_docs = Some(rest.parse().map_err(|_| parse_err(i + 1, "bad n_docs"))?);
                continue;
            }
            let (term, df) = line
                .split_once('\t')
                .ok_or_else(|| parse_err(i + 1, "expected term<TAB>df"))?;
            let df: usize = df.parse().map_err(|_| parse_err(i + 1, "bad df"))?;
            terms.push((term.to_string(), df));
        }
        let n_docs = n_docs.ok_or_else(|| parse_err(1, "missing n_docs header"))?;
        if terms.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(parse_err(0, "terms not in strictly increasing order"));
        }
        Ok(Self::from_sorted(terms, n_docs))
    }
}

/// Largest document frequency a term may have under `max_df_ratio`.
pub fn max_df_count(max_df_ratio: f64, n_docs: usize) -> usize {
    // The epsilon absorbs representation error such as 0.29 * 100 = 28.999...
    (max_df_ratio * n_docs as f64 + 1e-9).floor() as usize
}

/// Keeps terms with `min_df_count <= df <= floor(max_df_ratio * m)`.
pub fn build_vocabulary(train_docs: &[Vec<String>], max_df_ratio: f64, min_df_count: usize) -> Result<Vocabulary> {
    if !(max_df_ratio > 0.0 && max_df_ratio <= 1.0) {
        return Err(Error::InvalidParam(format!(
            "max_df_ratio must be in (0, 1], got {max_df_ratio}"
        )));
    }
    if min_df_count == 0 {
        return Err(Error::InvalidParam("min_df_count must be >= 1".into()));
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for doc in train_docs {
        let distinct: HashSet<&str> = doc.iter().map(String::as_str).collect();
        for term in distinct {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    let upper = max_df_count(max_df_ratio, train_docs.len());
    let kept: Vec<(String, usize)> = df
        .into_iter()
        .filter(|&(_, n)| n >= min_df_count && n <= upper)
        .map(|(t, n)| (t.to_string(), n))
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary {
            min_df: min_df_count,
            max_df_count: upper,
        });
    }
    Ok(Vocabulary::from_sorted(kept, train_docs.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    Tf,
    #[default]
    TfIdf,
}

impl FromStr for Weighting {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tf" => Ok(Self::Tf),
            "tfidf" | "tf-idf" => Ok(Self::TfIdf),
            _ => Err(Error::InvalidParam(format!("unknown weighting `{s}`"))),
        }
    }
}

impl std::fmt::Display for Weighting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Tf => "tf",
            Self::TfIdf => "tfidf",
        })
    }
}

/// Sparse document row, entries sorted by term id, no explicit zeros.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DocVector {
    pub article_id: String,
    pub entries: Vec<(u32, f64)>,
}

impl DocVector {
    pub fn norm_sq(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w * w).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }
}

pub fn vectorize(
    article_id: &str,
    doc: &[String],
    vocab: &Vocabulary,
    weighting: Weighting,
    normalize: bool,
) -> DocVector {
    let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
    for tok in doc {
        if let Some(id) = vocab.id(tok) {
            *counts.entry(id).or_insert(0) += 1;
        }
    }
    let m = vocab.n_docs() as f64;
    let mut entries: Vec<(u32, f64)> = counts
        .into_iter()
        .map(|(id, tf)| {
            let tf = f64::from(tf);
            let w = match weighting {
                Weighting::Tf => tf,
                Weighting::TfIdf => tf * (1.0 + m / vocab.df(id) as f64).ln(),
            };
            (id, w)
        })
        .collect();
    if normalize {
        let norm = entries.iter().map(|&(_, w)| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (_, w) in &mut entries {
                *w /= norm;
            }
        }
    }
    DocVector {
        article_id: article_id.to_string(),
        entries,
    }
}

/// Nonzero count of the document-term matrix (e).
pub fn nonzero_entries(vectors: &[DocVector]) -> usize {
    vectors.iter().map(DocVector::nnz).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn docs(raw: &[&[&str]]) -> Vec<Vec<String>> {
        raw.iter().map(|d| d.iter().map(|s| s.to_string()).collect()).collect()
    }

    #[test]
    fn stems_and_drops_stopwords() {
        let a = Analyzer::default();
        assert_eq!(
            a.tokenize_and_stem("Clustering of the clustered clusters"),
            vec!["cluster", "cluster", "cluster"]
        );
        assert!(a.tokenize_and_stem("").is_empty());
        assert!(a.tokenize_and_stem("the of and , . ;").is_empty());
    }

    #[test]
    fn punctuation_and_case() {
        let a = Analyzer::default();
        assert_eq!(
            a.tokenize_and_stem("Heart-Failure; (HEART)"),
            vec!["heart", "failur", "heart"]
        );
    }

    #[test]
    fn keywords_tokenized_per_phrase() {
        let a = Analyzer::default();
        let kw = vec!["Breast Cancer".to_string(), "mammography".to_string()];
        assert_eq!(a.keyword_tokens(&kw), vec!["breast", "cancer", "mammographi"]);
    }

    #[test]
    fn vocabulary_max_df_excludes_ubiquitous_term() {
        let raw: Vec<Vec<String>> = (0..10)
            .map(|i| {
                let mut d = vec!["common".to_string()];
                if i < 5 {
                    d.push("half".into());
                }
                d
            })
            .collect();
        let v = build_vocabulary(&raw, 0.9, 1).unwrap();
        assert_eq!(v.id("common"), None);
        assert_eq!(v.id("half"), Some(0));
        assert_eq!(v.df(0), 5);
    }

    #[test]
    fn vocabulary_min_df_inclusive() {
        let d = docs(&[&["a", "b"], &["a"], &["a", "c"]]);
        let v = build_vocabulary(&d, 1.0, 2).unwrap();
        // a: 3, b: 1, c: 1
        assert_eq!(v.len(), 1);
        let v = build_vocabulary(&d, 1.0, 3).unwrap();
        assert_eq!(v.term(0), "a");
        assert!(matches!(
            build_vocabulary(&d, 1.0, 4),
            Err(Error::EmptyVocabulary { .. })
        ));
    }

    #[test]
    fn vocabulary_ids_are_lexicographic() {
        let d = docs(&[&["zeta", "alpha", "mid"], &["mid"]]);
        let v = build_vocabulary(&d, 1.0, 1).unwrap();
        let terms: Vec<&str> = v.iter().map(|(t, _)| t).collect();
        assert_eq!(terms, vec!["alpha", "mid", "zeta"]);
        assert_eq!(v.id("zeta"), Some(2));
    }

    #[test]
    fn vocabulary_rejects_bad_params() {
        let d = docs(&[&["a"]]);
        assert!(build_vocabulary(&d, 0.0, 1).is_err());
        assert!(build_vocabulary(&d, 1.5, 1).is_err());
        assert!(build_vocabulary(&d, 0.5, 0).is_err());
    }

    #[test]
    fn tf_counts_and_normalization() {
        let d = docs(&[&["a", "a", "b"], &["b"]]);
        let v = build_vocabulary(&d, 1.0, 1).unwrap();
        let x = vectorize("x", &d[0], &v, Weighting::Tf, false);
        assert_eq!(x.entries, vec![(0, 2.0), (1, 1.0)]);
        let x = vectorize("x", &d[0], &v, Weighting::Tf, true);
        let s5 = 5f64.sqrt();
        assert!((x.entries[0].1 - 2.0 / s5).abs() < 1e-15);
        assert!((x.entries[1].1 - 1.0 / s5).abs() < 1e-15);
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn tfidf_hand_table() {
        // m = 3; df(a) = 2, df(b) = 1, df(c) = 3
        let d = docs(&[&["a", "a", "c"], &["a", "b", "c"], &["c"]]);
        let v = build_vocabulary(&d, 1.0, 1).unwrap();
        let w = |i: usize| vectorize("x", &d[i], &v, Weighting::TfIdf, false).entries;
        // ln(1 + 3/2) = 0.916290731874155, ln(1 + 3/1) = 1.386294361119891,
        // ln(1 + 3/3) = 0.693147180559945
        let expected = [
            vec![(0, 2.0 * 0.916_290_731_874_155), (2, 0.693_147_180_559_945)],
            vec![
                (0, 0.916_290_731_874_155),
                (1, 1.386_294_361_119_891),
                (2, 0.693_147_180_559_945),
            ],
            vec![(2, 0.693_147_180_559_945)],
        ];
        for (i, exp) in expected.iter().enumerate() {
            let got = w(i);
            assert_eq!(got.len(), exp.len());
            for ((gi, gw), (ei, ew)) in got.iter().zip(exp) {
                assert_eq!(gi, ei);
                assert!((gw - ew).abs() < 1e-12, "doc {i}: {gw} vs {ew}");
            }
        }
    }

    #[test]
    fn out_of_vocabulary_doc_is_zero_vector() {
        let d = docs(&[&["a"], &["a"]]);
        let v = build_vocabulary(&d, 1.0, 1).unwrap();
        let x = vectorize("x", &docs(&[&["zzz"]])[0], &v, Weighting::TfIdf, true);
        assert!(x.is_zero());
        assert_eq!(x.norm_sq(), 0.0);
    }

    #[test]
    fn vocabulary_save_load() {
        let d = docs(&[&["a", "b"], &["b", "c"]]);
        let v = build_vocabulary(&d, 1.0, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("vocab.tsv");
        v.save(&p).unwrap();
        assert_eq!(Vocabulary::load(&p).unwrap(), v);
    }
}
