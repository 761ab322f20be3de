//! Venue subprofiles: the documents that get indexed.
//!
//! * `Single` — one document per venue.
//! * `Distributed` — one document per article.
//! * `Grouped` — one document per non-empty (venue, cluster) intersection.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::ClusteringResult;
use crate::corpus::{Article, Corpus};
use crate::error::{Error, Result};
use crate::textprep::Analyzer;

/// Token → frequency.
pub type TermBag = BTreeMap<String, u32>;

pub fn bag_of<I, S>(tokens: I) -> TermBag
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let mut bag = TermBag::new();
    for t in tokens {
        *bag.entry(t.into()).or_insert(0) += 1;
    }
    bag
}

pub fn merge_into(target: &mut TermBag, other: &TermBag) {
    for (t, &n) in other {
        *target.entry(t.clone()).or_insert(0) += n;
    }
}

/// The three analyzed fields of a single article (or of a query built from
/// one). Text is analyzed without vocabulary pruning.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ArticleFields {
    pub content: TermBag,
    pub keywords: TermBag,
    pub authors: TermBag,
}

impl ArticleFields {
    pub fn from_parts(analyzer: &Analyzer, title_abstract: &str, keywords: &[String], authors: &[String]) -> Self {
        Self {
            content: bag_of(analyzer.tokenize_and_stem(title_abstract)),
            keywords: bag_of(analyzer.keyword_tokens(keywords)),
            authors: bag_of(
                authors
                    .iter()
                    .map(|a| a.trim())
                    .filter(|a| !a.is_empty())
                    .map(String::from),
            ),
        }
    }

    pub fn from_article(analyzer: &Analyzer, a: &Article) -> Self {
        Self::from_parts(analyzer, &a.title_abstract, &a.keywords, &a.authors)
    }

    fn absorb(&mut self, other: &ArticleFields) {
        merge_into(&mut self.content, &other.content);
        merge_into(&mut self.keywords, &other.keywords);
        merge_into(&mut self.authors, &other.authors);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProfileStrategy {
    Single,
    Distributed,
    Grouped,
}

impl FromStr for ProfileStrategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sp" => Ok(Self::Single),
            "dp" => Ok(Self::Distributed),
            "gp" => Ok(Self::Grouped),
            _ => Err(Error::InvalidParam(format!(
                "unknown profile strategy `{s}` (expected sp, dp or gp)"
            ))),
        }
    }
}

impl std::fmt::Display for ProfileStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Single => "sp",
            Self::Distributed => "dp",
            Self::Grouped => "gp",
        })
    }
}

/// One indexable macro-document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subprofile {
    pub doc_id: String,
    #[serde(rename = "venue")]
    pub venue_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_id: Option<u32>,
    pub content: TermBag,
    pub keywords: TermBag,
    /// Author id → number of member articles listing that author.
    pub authors: TermBag,
    pub n_articles: usize,
}

impl Subprofile {
    fn new(doc_id: String, venue_id: &str, cluster_id: Option<u32>) -> Self {
        Self {
            doc_id,
            venue_id: venue_id.to_string(),
            cluster_id,
            content: TermBag::new(),
            keywords: TermBag::new(),
            authors: TermBag::new(),
            n_articles: 0,
        }
    }

    fn add(&mut self, fields: &ArticleFields) {
        merge_into(&mut self.content, &fields.content);
        merge_into(&mut self.keywords, &fields.keywords);
        // Each article lists an author once.
        for a in fields.authors.keys() {
            *self.authors.entry(a.clone()).or_insert(0) += 1;
        }
        self.n_articles += 1;
    }

    pub fn fields(&self) -> ArticleFields {
        ArticleFields {
            content: self.content.clone(),
            keywords: self.keywords.clone(),
            authors: self.authors.clone(),
        }
    }
}

/// Builds subprofiles for every venue of `train`. Output is sorted by doc_id.
pub fn build_profiles(
    train: &Corpus,
    strategy: ProfileStrategy,
    clustering: Option<&ClusteringResult>,
    analyzer: &Analyzer,
) -> Result<Vec<Subprofile>> {
    let labels: Option<HashMap<&str, u32>> = match (strategy, clustering) {
        (ProfileStrategy::Grouped, None) => return Err(Error::Profile("grouped profiles need a clustering".into())),
        (ProfileStrategy::Grouped, Some(c)) => {
            let map: HashMap<&str, u32> = c
                .article_ids
                .iter()
                .map(String::as_str)
                .zip(c.labels.iter().copied())
                .collect();
            if let Some(bad) = map.values().find(|&&l| l as usize >= c.k) {
                return Err(Error::Profile(format!("cluster id {bad} >= k={}", c.k)));
            }
            Some(map)
        }
        _ => None,
    };

    let mut by_venue: BTreeMap<&str, Vec<&Article>> = BTreeMap::new();
    for a in train.articles() {
        by_venue.entry(a.venue_id.as_str()).or_default().push(a);
    }

    let per_venue: Result<Vec<Vec<Subprofile>>> = by_venue
        .par_iter()
        .map(|(&venue, articles)| {
            let mut docs: BTreeMap<String, Subprofile> = BTreeMap::new();
            for a in articles {
                let (doc_id, cluster) = match strategy {
                    ProfileStrategy::Single => (venue.to_string(), None),
                    ProfileStrategy::Distributed => (format!("{venue}#{}", a.article_id), None),
                    ProfileStrategy::Grouped => {
                        let label = labels
                            .as_ref()
                            .and_then(|m| m.get(a.article_id.as_str()))
                            .copied()
                            .ok_or_else(|| {
                                Error::Profile(format!("article `{}` has no cluster assignment", a.article_id))
                            })?;
                        (format!("{venue}#{label}"), Some(label))
                    }
                };
                let fields = ArticleFields::from_article(analyzer, a);
                docs.entry(doc_id.clone())
                    .or_insert_with(|| Subprofile::new(doc_id, venue, cluster))
                    .add(&fields);
            }
            Ok(docs.into_values().collect())
        })
        .collect();

    let mut out: Vec<Subprofile> = per_venue?.into_iter().flatten().collect();
    out.sort_by(|a, b| a.doc_id.cmp(&b.doc_id));
    Ok(out)
}

/// Per-venue field totals, the sum over that venue's subprofiles.
pub fn venue_totals(profiles: &[Subprofile]) -> BTreeMap<String, ArticleFields> {
    let mut totals: BTreeMap<String, ArticleFields> = BTreeMap::new();
    for p in profiles {
        totals.entry(p.venue_id.clone()).or_default().absorb(&p.fields());
    }
    totals
}

pub fn save_profiles(profiles: &[Subprofile], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let res = (|| -> std::io::Result<()> {
        for p in profiles {
            serde_json::to_writer(&mut w, p)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

pub fn load_profiles(path: &Path) -> Result<Vec<Subprofile>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            reason: e.to_string(),
        })?);
    }
    Ok(out)
}
