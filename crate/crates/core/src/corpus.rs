//! Article collection: loading, validation, venue filtering and the
//! temporal train/test split.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// One publication record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    #[serde(rename = "id")]
    pub article_id: String,
    #[serde(rename = "venue")]
    pub venue_id: String,
    pub year: i32,
    #[serde(default)]
    pub title_abstract: String,
    #[serde(default)]
    pub keywords: Vec<String>,
    /// Opaque author identifiers (ORCID-like). Never stemmed or case-folded.
    #[serde(default)]
    pub authors: Vec<String>,
}

impl Article {
    fn validate(&self) -> std::result::Result<(), String> {
        if self.article_id.trim().is_empty() {
            return Err("empty id".into());
        }
        if self.venue_id.trim().is_empty() {
            return Err("empty venue".into());
        }
        if self.year <= 0 {
            return Err(format!("year must be positive, got {}", self.year));
        }
        if self.title_abstract.trim().is_empty() && self.keywords.is_empty() {
            return Err("article has neither title/abstract nor keywords".into());
        }
        Ok(())
    }
}

/// An immutable, validated set of articles with per-venue counts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    articles: Vec<Article>,
    venues: BTreeMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus, rejecting invalid records and duplicate ids.
    pub fn new(articles: Vec<Article>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(articles.len());
        let mut venues = BTreeMap::new();
        for a in &articles {
            a.validate()
                .map_err(|reason| Error::InvalidParam(format!("article `{}`: {reason}", a.article_id)))?;
            if !seen.insert(a.article_id.as_str()) {
                return Err(Error::DuplicateArticle(a.article_id.clone()));
            }
            *venues.entry(a.venue_id.clone()).or_insert(0) += 1;
        }
        Ok(Self { articles, venues })
    }

    pub fn articles(&self) -> &[Article] {
        &self.articles
    }

    /// Venue id → number of articles (m_j).
    pub fn venues(&self) -> &BTreeMap<String, usize> {
        &self.venues
    }

    pub fn len(&self) -> usize {
        self.articles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }

    pub fn n_venues(&self) -> usize {
        self.venues.len()
    }

    pub fn contains_venue(&self, venue: &str) -> bool {
        self.venues.contains_key(venue)
    }

    fn retain(&self, keep: impl Fn(&Article) -> bool) -> Self {
        let articles: Vec<Article> = self.articles.iter().filter(|a| keep(a)).cloned().collect();
        // Articles were validated on the way in.
        Corpus::new(articles).expect("subset of a valid corpus is valid")
    }

    /// Writes the corpus in the line-delimited record format.
    pub fn write_jsonl(&self, out: &mut impl Write) -> std::io::Result<()> {
        for a in &self.articles {
            serde_json::to_writer(&mut *out, a)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_jsonl(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }
}

/// Maps record keys onto article fields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSchema {
    pub id: String,
    pub venue: String,
    pub year: String,
    pub title_abstract: String,
    pub keywords: String,
    pub authors: String,
}

impl Default for CorpusSchema {
    fn default() -> Self {
        Self {
            id: "id".into(),
            venue: "venue".into(),
            year: "year".into(),
            title_abstract: "title_abstract".into(),
            keywords: "keywords".into(),
            authors: "authors".into(),
        }
    }
}

impl CorpusSchema {
    fn extract(&self, record: &Value) -> std::result::Result<Article, String> {
        let obj = record.as_object().ok_or("record is not an object")?;
        let string = |key: &str, required: bool| -> std::result::Result<String, String> {
            match obj.get(key) {
                Some(Value::String(s)) => Ok(s.trim().to_string()),
                Some(Value::Number(n)) => Ok(n.to_string()),
                Some(Value::Null) | None if !required => Ok(String::new()),
                Some(Value::Null) | None => Err(format!("missing `{key}`")),
                Some(_) => Err(format!("`{key}` is not a string")),
            }
        };
        let list = |key: &str| -> std::result::Result<Vec<String>, String> {
            match obj.get(key) {
                None | Some(Value::Null) => Ok(Vec::new()),
                Some(Value::Array(items)) => items
                    .iter()
                    .map(|v| match v {
                        Value::String(s) => Ok(s.trim().to_string()),
                        _ => Err(format!("`{key}` must contain strings")),
                    })
                    .filter(|r| r.as_ref().map_or(true, |s| !s.is_empty()))
                    .collect(),
                Some(_) => Err(format!("`{key}` is not an array")),
            }
        };
        let year = match obj.get(&self.year) {
            Some(Value::Number(n)) => n
                .as_i64()
                .and_then(|y| i32::try_from(y).ok())
                .ok_or_else(|| format!("`{}` is not an integer year", self.year))?,
            Some(Value::String(s)) => s
                .trim()
                .parse()
                .map_err(|_| format!("`{}` is not an integer year", self.year))?,
            _ => return Err(format!("missing `{}`", self.year)),
        };
        let article = Article {
            article_id: string(&self.id, true)?,
            venue_id: string(&self.venue, true)?,
            year,
            title_abstract: string(&self.title_abstract, false)?,
            keywords: list(&self.keywords)?,
            authors: list(&self.authors)?,
        };
        article.validate()?;
        Ok(article)
    }
}

/// Outcome of [`load_corpus`] besides the corpus itself.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub skipped: usize,
    pub warnings: Vec<String>,
}

/// Loads a line-delimited corpus. Malformed lines are skipped with a warning;
/// duplicate article ids are fatal.
pub fn load_corpus(path: &Path, schema: &CorpusSchema) -> Result<(Corpus, LoadReport)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(BufReader::new(file), path, schema)
}

pub fn read_corpus(reader: impl BufRead, path: &Path, schema: &CorpusSchema) -> Result<(Corpus, LoadReport)> {
    let mut report = LoadReport::default();
    let mut articles = Vec::new();
    let mut seen = HashSet::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<Value>(&line)
            .map_err(|e| e.to_string())
            .and_then(|v| schema.extract(&v));
        match parsed {
            Ok(article) => {
                if !seen.insert(article.article_id.clone()) {
                    return Err(Error::DuplicateArticle(article.article_id));
                }
                articles.push(article);
            }
            Err(reason) => {
                let msg = format!("{}:{}: skipped: {reason}", path.display(), lineno + 1);
                log::warn!("{msg}");
                report.warnings.push(msg);
                report.skipped += 1;
            }
        }
    }
    Ok((Corpus::new(articles)?, report))
}

/// Keeps only articles whose venue has at least `min_articles` articles.
pub fn filter_venues(corpus: &Corpus, min_articles: usize) -> Result<Corpus> {
    if min_articles == 0 {
        return Err(Error::InvalidParam("min_articles must be >= 1".into()));
    }
    let kept = corpus.retain(|a| corpus.venues[&a.venue_id] >= min_articles);
    if kept.is_empty() {
        return Err(Error::EmptyCorpus(format!(
            "no venue has at least {min_articles} articles"
        )));
    }
    Ok(kept)
}

/// Drops every article of the listed venues.
pub fn exclude_venues(corpus: &Corpus, excluded: &[String]) -> Result<Corpus> {
    let excluded: BTreeSet<&str> = excluded.iter().map(String::as_str).collect();
    let kept = corpus.retain(|a| !excluded.contains(a.venue_id.as_str()));
    if kept.is_empty() {
        return Err(Error::EmptyCorpus("every venue was excluded".into()));
    }
    Ok(kept)
}

/// Articles with `year <= boundary_year` train, the rest test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub boundary_year: i32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Corpus,
    pub test: Corpus,
    /// Test article ids whose venue never occurs in train. They stay in the
    /// test set and count as misses.
    pub unseen_venue_articles: Vec<String>,
}

pub fn split_by_year(corpus: &Corpus, spec: SplitSpec) -> Result<Split> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus("cannot split an empty corpus".into()));
    }
    let train = corpus.retain(|a| a.year <= spec.boundary_year);
    let test = corpus.retain(|a| a.year > spec.boundary_year);
    if train.is_empty() {
        return Err(Error::EmptyCorpus(format!(
            "no training articles with year <= {}",
            spec.boundary_year
        )));
    }
    if test.is_empty() {
        return Err(Error::EmptyCorpus(format!(
            "no test articles with year > {}",
            spec.boundary_year
        )));
    }
    let unseen_venue_articles: Vec<String> = test
        .articles()
        .iter()
        .filter(|a| !train.contains_venue(&a.venue_id))
        .map(|a| a.article_id.clone())
        .collect();
    if !unseen_venue_articles.is_empty() {
        log::warn!(
            "{} test articles belong to venues absent from train",
            unseen_venue_articles.len()
        );
    }
    Ok(Split {
        train,
        test,
        unseen_venue_articles,
    })
}
