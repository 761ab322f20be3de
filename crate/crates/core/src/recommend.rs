//! Query → venue ranking: search the subprofile index, fuse subprofile
//! scores per venue, and optionally blend content with authorship.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fusion::{comb_lgdcs, comb_linear, normalize_max, FusionParams, VenueRanking};
use crate::index::{search, FieldWeights, FieldedIndex, Query, SearchParams};
use crate::profile::{ArticleFields, TermBag};

/// Which evidence feeds the venue ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Features {
    /// Title+abstract and keywords (CB).
    Content,
    /// Author ids only (AU).
    Authors,
    /// Separately fused and max-normalized CB and AU rankings blended
    /// linearly (CombLinear).
    Combined,
    /// One query holding both content and author clauses.
    Naive,
}

impl FromStr for Features {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cb" => Ok(Self::Content),
            "au" => Ok(Self::Authors),
            "combined" => Ok(Self::Combined),
            "naive" => Ok(Self::Naive),
            _ => Err(Error::InvalidParam(format!(
                "unknown features `{s}` (expected cb, au, combined or naive)"
            ))),
        }
    }
}

impl std::fmt::Display for Features {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Content => "cb",
            Self::Authors => "au",
            Self::Combined => "combined",
            Self::Naive => "naive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievalParams {
    pub lambda_s: f64,
    /// Number of subprofile documents fed into fusion.
    pub depth: usize,
    /// Clause weights; the content ranking uses content+keywords, the author
    /// ranking uses authors, the naive query uses all three.
    pub weights: FieldWeights,
}

impl Default for RetrievalParams {
    fn default() -> Self {
        Self {
            lambda_s: 0.1,
            depth: 1000,
            weights: FieldWeights::ALL,
        }
    }
}

impl RetrievalParams {
    fn search_params(&self, weights: FieldWeights) -> SearchParams {
        SearchParams {
            weights,
            lambda_s: self.lambda_s,
            top_n: self.depth,
        }
    }

    fn content_weights(&self) -> FieldWeights {
        FieldWeights {
            authors: 0.0,
            ..self.weights
        }
    }

    fn author_weights(&self) -> FieldWeights {
        FieldWeights {
            content: 0.0,
            keywords: 0.0,
            ..self.weights
        }
    }
}

/// The venue rankings computed for one target article.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Recommendation {
    /// CombScore_t per venue (unnormalized); empty unless content was used.
    pub content: VenueRanking,
    /// CombScore_a per venue (unnormalized); empty unless authors were used.
    pub author: VenueRanking,
    /// The final ranking for the requested features.
    pub fused: VenueRanking,
}

impl Recommendation {
    /// `(rank, venue, fused, content component, author component)` rows of
    /// the first `top_x` venues. Components are the max-normalized scores
    /// that enter the blend.
    pub fn rows(&self, top_x: usize) -> Vec<(usize, String, f64, f64, f64)> {
        let c = normalize_max(&self.content);
        let a = normalize_max(&self.author);
        self.fused
            .entries()
            .iter()
            .take(top_x)
            .enumerate()
            .map(|(i, (v, s))| {
                (
                    i + 1,
                    v.clone(),
                    *s,
                    c.score(v).unwrap_or(0.0),
                    a.score(v).unwrap_or(0.0),
                )
            })
            .collect()
    }
}

/// Content index plus an optional separate author index.
#[derive(Debug, Clone)]
pub struct Recommender {
    content_index: FieldedIndex,
    author_index: Option<FieldedIndex>,
    pub retrieval: RetrievalParams,
}

fn query_from(content: &TermBag, keywords: &TermBag, authors: &TermBag) -> Option<Query> {
    Query::new(content.clone(), keywords.clone(), authors.clone()).ok()
}

impl Recommender {
    /// `author_index` of `None` means author queries run against the content
    /// index.
    pub fn new(
        content_index: FieldedIndex,
        author_index: Option<FieldedIndex>,
        retrieval: RetrievalParams,
    ) -> Result<Self> {
        if !(retrieval.lambda_s > 0.0 && retrieval.lambda_s < 1.0) {
            return Err(Error::InvalidParam(format!(
                "lambda_s must be in (0, 1), got {}",
                retrieval.lambda_s
            )));
        }
        if retrieval.depth == 0 {
            return Err(Error::InvalidParam("depth must be >= 1".into()));
        }
        Ok(Self {
            content_index,
            author_index,
            retrieval,
        })
    }

    pub fn content_index(&self) -> &FieldedIndex {
        &self.content_index
    }

    pub fn author_index(&self) -> &FieldedIndex {
        self.author_index.as_ref().unwrap_or(&self.content_index)
    }

    fn ranked_venues(
        &self,
        index: &FieldedIndex,
        fields: &ArticleFields,
        weights: FieldWeights,
    ) -> Result<VenueRanking> {
        let Some(query) = query_from(&fields.content, &fields.keywords, &fields.authors) else {
            return Ok(VenueRanking::default());
        };
        if query.is_empty_under(&weights) {
            return Ok(VenueRanking::default());
        }
        let ranked = search(index, &query, &self.retrieval.search_params(weights))?;
        Ok(comb_lgdcs(&ranked, index))
    }

    /// CombScore_t ranking.
    pub fn content_ranking(&self, fields: &ArticleFields) -> Result<VenueRanking> {
        self.ranked_venues(&self.content_index, fields, self.retrieval.content_weights())
    }

    /// CombScore_a ranking.
    pub fn author_ranking(&self, fields: &ArticleFields) -> Result<VenueRanking> {
        self.ranked_venues(self.author_index(), fields, self.retrieval.author_weights())
    }

    /// Single query with content and author clauses over the content index.
    pub fn naive_ranking(&self, fields: &ArticleFields) -> Result<VenueRanking> {
        self.ranked_venues(&self.content_index, fields, self.retrieval.weights)
    }

    pub fn recommend(
        &self,
        fields: &ArticleFields,
        features: Features,
        fusion: FusionParams,
    ) -> Result<Recommendation> {
        Ok(match features {
            Features::Content => {
                let content = self.content_ranking(fields)?;
                Recommendation {
                    fused: content.clone(),
                    content,
                    author: VenueRanking::default(),
                }
            }
            Features::Authors => {
                let author = self.author_ranking(fields)?;
                Recommendation {
                    fused: author.clone(),
                    content: VenueRanking::default(),
                    author,
                }
            }
            Features::Naive => Recommendation {
                fused: self.naive_ranking(fields)?,
                ..Recommendation::default()
            },
            Features::Combined => {
                let content = self.content_ranking(fields)?;
                let author = self.author_ranking(fields)?;
                let fused = comb_linear(&normalize_max(&content), &normalize_max(&author), fusion)?;
                Recommendation { content, author, fused }
            }
        })
    }
}
