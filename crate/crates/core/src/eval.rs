//! accuracy@X, MRR and the holdout evaluation loop.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::fusion::{comb_linear, normalize_max, FusionParams, VenueRanking};
use crate::profile::{ArticleFields, ProfileStrategy};
use crate::recommend::{Features, Recommender};
use crate::textprep::Analyzer;

pub const DEFAULT_CUTOFFS: [usize; 3] = [1, 5, 10];
pub const DEFAULT_MRR_CUTOFF: usize = 40;

/// 1-based position of `true_venue`, if ranked.
pub fn rank_of_truth(ranking: &VenueRanking, true_venue: &str) -> Option<usize> {
    ranking.position(true_venue)
}

pub fn accuracy_at(ranks: &[Option<usize>], x: usize) -> Result<f64> {
    if x == 0 {
        return Err(Error::InvalidParam("X must be >= 1".into()));
    }
    if ranks.is_empty() {
        return Err(Error::EmptyRanks);
    }
    let hits = ranks.iter().filter(|r| matches!(r, Some(p) if *p <= x)).count();
    Ok(hits as f64 / ranks.len() as f64)
}

/// Mean reciprocal rank; ranks beyond `cutoff` and misses contribute 0.
pub fn mrr(ranks: &[Option<usize>], cutoff: usize) -> Result<f64> {
    if cutoff == 0 {
        return Err(Error::InvalidParam("cutoff must be >= 1".into()));
    }
    if ranks.is_empty() {
        return Err(Error::EmptyRanks);
    }
    let total: f64 = ranks
        .iter()
        .map(|r| match r {
            Some(p) if *p <= cutoff => 1.0 / *p as f64,
            _ => 0.0,
        })
        .sum();
    Ok(total / ranks.len() as f64)
}

/// Configuration that produced a report.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSetup {
    pub features: Features,
    pub strategy: ProfileStrategy,
    /// Profile strategy of the author index when it differs from `strategy`.
    pub author_strategy: Option<ProfileStrategy>,
    pub k: Option<usize>,
    pub seed: u64,
    pub lambda_s: f64,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub setup: EvalSetup,
    /// Only for combined features.
    pub lambda_blend: Option<f64>,
    pub acc_at: BTreeMap<usize, f64>,
    pub mrr: f64,
    pub mrr_cutoff: usize,
    pub n_queries: usize,
    /// Test articles whose venue has no profile; counted as misses.
    pub n_unseen: usize,
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "-".to_string(), T::to_string)
}

impl EvalReport {
    pub fn acc(&self, x: usize) -> f64 {
        self.acc_at.get(&x).copied().unwrap_or(f64::NAN)
    }

    fn config_string(&self) -> String {
        let s = &self.setup;
        format!(
            "features={};strategy={};author_strategy={};k={};seed={};lambda_s={};lambda_blend={};depth={}",
            s.features,
            s.strategy,
            opt(&s.author_strategy),
            opt(&s.k),
            s.seed,
            s.lambda_s,
            opt(&self.lambda_blend),
            s.depth
        )
    }

    /// Short stable hash of the configuration.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.config_string().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn csv_header(cutoffs: &[usize]) -> String {
        let mut h = String::from(
            "fingerprint,features,strategy,author_strategy,k,seed,lambda_s,lambda_blend,depth,n_queries,n_unseen",
        );
        for x in cutoffs {
            let _ = write!(h, ",acc@{x}");
        }
        h.push_str(",mrr");
        h
    }

    pub fn csv_row(&self) -> String {
        let s = &self.setup;
        let mut row = format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.fingerprint(),
            s.features,
            s.strategy,
            opt(&s.author_strategy),
            opt(&s.k),
            s.seed,
            s.lambda_s,
            opt(&self.lambda_blend),
            s.depth,
            self.n_queries,
            self.n_unseen
        );
        for v in self.acc_at.values() {
            let _ = write!(row, ",{v:.6}");
        }
        let _ = write!(row, ",{:.6}", self.mrr);
        row
    }

    pub fn to_text(&self) -> String {
        let mut t = format!(
            "config\t{}\nfingerprint\t{}\n",
            self.config_string(),
            self.fingerprint()
        );
        let _ = writeln!(t, "queries\t{} ({} with unseen venue)", self.n_queries, self.n_unseen);
        for (x, v) in &self.acc_at {
            let _ = writeln!(t, "acc@{x}\t{v:.4}");
        }
        let _ = writeln!(t, "mrr@{}\t{:.4}", self.mrr_cutoff, self.mrr);
        t
    }
}

pub fn reports_to_csv(reports: &[EvalReport]) -> String {
    let cutoffs: Vec<usize> = reports
        .first()
        .map(|r| r.acc_at.keys().copied().collect())
        .unwrap_or_else(|| DEFAULT_CUTOFFS.to_vec());
    let mut out = EvalReport::csv_header(&cutoffs);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub cutoffs: Vec<usize>,
    pub mrr_cutoff: usize,
    /// CombLinear weights to evaluate; ignored unless features are combined.
    pub lambdas: Vec<f64>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            cutoffs: DEFAULT_CUTOFFS.to_vec(),
            mrr_cutoff: DEFAULT_MRR_CUTOFF,
            lambdas: vec![0.75],
        }
    }
}

/// `start:stop:step`, inclusive of `stop` up to rounding.
pub fn parse_sweep(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::InvalidParam(format!("bad sweep `{spec}` (expected start:stop:step)"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if step.is_nan() || step <= 0.0 || stop < start {
        return Err(bad());
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| {
            // Round to 1e-9 so 0.05 steps print as 0.05, 0.1, ...
            let v = start + i as f64 * step;
            (v * 1e9).round() / 1e9
        })
        .collect())
}

/// Rank of the true venue for every test article, one vector per λ (a
/// single vector unless features are combined). Query order follows the
/// test corpus.
pub fn collect_ranks(
    recommender: &Recommender,
    test: &Corpus,
    analyzer: &Analyzer,
    features: Features,
    lambdas: &[f64],
) -> Result<Vec<Vec<Option<usize>>>> {
    let fusion: Vec<FusionParams> = lambdas.iter().map(|&l| FusionParams::new(l)).collect::<Result<_>>()?;
    let per_query: Vec<Vec<Option<usize>>> = test
        .articles()
        .par_iter()
        .map(|a| -> Result<Vec<Option<usize>>> {
            let fields = ArticleFields::from_article(analyzer, a);
            let truth = a.venue_id.as_str();
            Ok(match features {
                Features::Content => vec![rank_of_truth(&recommender.content_ranking(&fields)?, truth)],
                Features::Authors => vec![rank_of_truth(&recommender.author_ranking(&fields)?, truth)],
                Features::Naive => vec![rank_of_truth(&recommender.naive_ranking(&fields)?, truth)],
                Features::Combined => {
                    let c = normalize_max(&recommender.content_ranking(&fields)?);
                    let au = normalize_max(&recommender.author_ranking(&fields)?);
                    fusion
                        .iter()
                        .map(|&p| comb_linear(&c, &au, p).map(|r| rank_of_truth(&r, truth)))
                        .collect::<Result<_>>()?
                }
            })
        })
        .collect::<Result<_>>()?;
    let n_sets = if features == Features::Combined {
        lambdas.len()
    } else {
        1
    };
    Ok((0..n_sets)
        .map(|i| per_query.iter().map(|ranks| ranks[i]).collect())
        .collect())
}

/// Runs every test article through the recommender and aggregates metrics.
pub fn evaluate(
    recommender: &Recommender,
    test: &Corpus,
    analyzer: &Analyzer,
    setup: &EvalSetup,
    options: &EvalOptions,
) -> Result<Vec<EvalReport>> {
    if test.is_empty() {
        return Err(Error::EmptyRanks);
    }
    let lambdas: Vec<Option<f64>> = if setup.features == Features::Combined {
        if options.lambdas.is_empty() {
            return Err(Error::InvalidParam("combined features need at least one lambda".into()));
        }
        options.lambdas.iter().copied().map(Some).collect()
    } else {
        vec![None]
    };
    let raw: Vec<f64> = lambdas.iter().map(|l| l.unwrap_or(0.0)).collect();
    let ranks = collect_ranks(recommender, test, analyzer, setup.features, &raw)?;
    let known: BTreeSet<&str> = recommender
        .content_index()
        .docs()
        .iter()
        .chain(recommender.author_index().docs())
        .map(|d| d.venue_id.as_str())
        .collect();
    let n_unseen = test
        .articles()
        .iter()
        .filter(|a| !known.contains(a.venue_id.as_str()))
        .count();
    lambdas
        .iter()
        .zip(&ranks)
        .map(|(&lambda_blend, ranks)| {
            let acc_at = options
                .cutoffs
                .iter()
                .map(|&x| Ok((x, accuracy_at(ranks, x)?)))
                .collect::<Result<_>>()?;
            Ok(EvalReport {
                setup: setup.clone(),
                lambda_blend,
                acc_at,
                mrr: mrr(ranks, options.mrr_cutoff)?,
                mrr_cutoff: options.mrr_cutoff,
                n_queries: ranks.len(),
                n_unseen,
            })
        })
        .collect()
}
