//! Subprofile → venue score aggregation and content/author blending.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::index::{FieldedIndex, RankedList};

/// Resolves a retrieved document to its venue.
pub trait VenueOf {
    fn venue_of(&self, doc_id: &str) -> Option<&str>;
}

impl VenueOf for FieldedIndex {
    fn venue_of(&self, doc_id: &str) -> Option<&str> {
        self.doc_no(doc_id).map(|d| self.venue_of_doc(d))
    }
}

impl VenueOf for HashMap<String, String> {
    fn venue_of(&self, doc_id: &str) -> Option<&str> {
        self.get(doc_id).map(String::as_str)
    }
}

impl VenueOf for BTreeMap<String, String> {
    fn venue_of(&self, doc_id: &str) -> Option<&str> {
        self.get(doc_id).map(String::as_str)
    }
}

/// Venues by non-increasing score, ties by ascending venue id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VenueRanking {
    entries: Vec<(String, f64)>,
}

impl VenueRanking {
    /// Sorts scores into a ranking. Each venue must appear once.
    pub fn from_scores(scores: impl IntoIterator<Item = (String, f64)>) -> Self {
        let mut entries: Vec<(String, f64)> = scores.into_iter().collect();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Self { entries }
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_score(&self) -> f64 {
        self.entries.first().map_or(0.0, |e| e.1)
    }

    pub fn score(&self, venue: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.0 == venue).map(|e| e.1)
    }

    pub fn venues(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.0.as_str())
    }

    /// 1-based rank of `venue`.
    pub fn position(&self, venue: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.0 == venue).map(|p| p + 1)
    }
}

/// CombLgDCS: a venue's best subprofile score plus the scores of its other
/// retrieved subprofiles, each divided by `log2(position + 1)` where the
/// position is taken in the global document ranking.
///
/// Documents with no known venue are ignored; they still occupy their
/// positions.
pub fn comb_lgdcs(ranked: &RankedList, venues: &impl VenueOf) -> VenueRanking {
    let mut fused: HashMap<&str, f64> = HashMap::new();
    for doc in &ranked.entries {
        let Some(venue) = venues.venue_of(&doc.doc_id) else {
            log::debug!("ranked document `{}` has no venue", doc.doc_id);
            continue;
        };
        // The list is sorted, so the first document seen for a venue is its
        // maximum (earliest on ties).
        match fused.get_mut(venue) {
            None => {
                fused.insert(venue, doc.score);
            }
            Some(total) => *total += doc.score / ((doc.position + 1) as f64).log2(),
        }
    }
    VenueRanking::from_scores(fused.into_iter().map(|(v, s)| (v.to_string(), s)))
}

/// Divides every score by the maximum. Empty and all-zero rankings are
/// returned unchanged.
pub fn normalize_max(ranking: &VenueRanking) -> VenueRanking {
    let max = ranking.max_score();
    if max <= 0.0 {
        return ranking.clone();
    }
    VenueRanking::from_scores(ranking.entries.iter().map(|(v, s)| (v.clone(), s / max)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionParams {
    /// Weight of the content ranking; `1 - lambda_blend` goes to authors.
    pub lambda_blend: f64,
}

impl FusionParams {
    pub fn new(lambda_blend: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&lambda_blend) {
            Ok(Self { lambda_blend })
        } else {
            Err(Error::InvalidParam(format!(
                "lambda_blend must be in [0, 1], got {lambda_blend}"
            )))
        }
    }
}

impl Default for FusionParams {
    fn default() -> Self {
        Self { lambda_blend: 0.75 }
    }
}

const NORMALIZED_SLACK: f64 = 1e-9;

/// CombLinear over two max-normalized rankings. Venues missing from one side
/// get 0 from it; venues whose blended score is 0 are left out, matching the
/// positive-score contract of the document rankings.
pub fn comb_linear(content: &VenueRanking, author: &VenueRanking, params: FusionParams) -> Result<VenueRanking> {
    for r in [content, author] {
        if r.max_score() > 1.0 + NORMALIZED_SLACK {
            return Err(Error::NotNormalized(r.max_score()));
        }
    }
    let lambda = params.lambda_blend;
    let mut parts: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
    for (v, s) in &content.entries {
        parts.entry(v).or_default().0 = *s;
    }
    for (v, s) in &author.entries {
        parts.entry(v).or_default().1 = *s;
    }
    Ok(VenueRanking::from_scores(
        parts
            .into_iter()
            .map(|(v, (c, a))| (v.to_string(), lambda * c + (1.0 - lambda) * a))
            .filter(|(_, s)| *s > 0.0),
    ))
}
