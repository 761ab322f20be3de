//! Run configuration: a flat `key = value` text file, overridable key by key
//! from the command line.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use venuerec::cluster::KMethod;
use venuerec::eval::{parse_sweep, EvalOptions};
use venuerec::pipeline::{ClusterParams, PipelineConfig, PrepParams};
use venuerec::profile::ProfileStrategy;
use venuerec::recommend::{Features, RetrievalParams};
use venuerec::synthgen::SynthSpec;
use venuerec::textprep::Weighting;

use crate::error::{CliError, CliResult};

/// Which commands a key belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Run,
    Synth,
}

#[derive(Debug, Clone, Copy)]
pub struct Key {
    pub name: &'static str,
    pub help: &'static str,
    pub scope: Scope,
}

const fn run(name: &'static str, help: &'static str) -> Key {
    Key {
        name,
        help,
        scope: Scope::Run,
    }
}

const fn synth(name: &'static str, help: &'static str) -> Key {
    Key {
        name,
        help,
        scope: Scope::Synth,
    }
}

/// Every configuration key, in file order.
pub const KEYS: &[Key] = &[
    run("corpus", "Input corpus (line-delimited JSON records)"),
    run("artifacts", "Artifacts directory"),
    run(
        "stopwords",
        "Stopword file, one word per line; empty for the bundled list",
    ),
    run("min-venue-articles", "Drop venues with fewer articles"),
    run("train-through-year", "Last year of the training split"),
    run("exclude-venues", "Comma-separated venues to drop before filtering"),
    run("max-df", "Drop terms in more than this fraction of articles"),
    run("min-df", "Drop terms in fewer articles"),
    run("weighting", "Clustering term weights: tfidf or tf"),
    run("normalize", "L2-normalize clustering vectors: true or false"),
    run("k-method", "Number of clusters: can, kaufman or fixed"),
    run("k", "Number of clusters; implies k-method fixed"),
    run("seed", "Seed of all pipeline randomness"),
    run("max-iter", "K-means iteration cap"),
    run("tol", "K-means relative inertia tolerance"),
    run("strategy", "Content profiles: sp, dp or gp"),
    run("author-strategy", "Author profiles for combined features: sp, dp or gp"),
    run("features", "Evidence: cb, au, combined or naive"),
    run("lambda-s", "Jelinek-Mercer collection weight in (0, 1)"),
    run("weight-content", "Title+abstract clause weight"),
    run("weight-keywords", "Keyword clause weight"),
    run("weight-authors", "Author clause weight"),
    run("depth", "Subprofiles retrieved per query before fusion"),
    run("lambda-blend", "Content share of the combined score"),
    run("sweep-lambda", "Evaluate a lambda-blend range start:stop:step"),
    run("cutoffs", "Comma-separated accuracy cutoffs"),
    run("mrr-cutoff", "Positions counted by MRR"),
    run("top", "Venues printed by recommend"),
    synth("synth-n-venues", "Venues"),
    synth("synth-topics-per-venue", "Topics per venue"),
    synth("synth-vocab-per-topic", "Words per topic vocabulary"),
    synth("synth-shared-vocab", "Words in the shared noise vocabulary"),
    synth("synth-n-themes", "Theme pools shared across venues; 0 disables"),
    synth("synth-theme-vocab", "Words per theme pool"),
    synth(
        "synth-theme-share",
        "Fraction of a topic vocabulary drawn from its theme",
    ),
    synth("synth-train-per-venue-topic", "Mean training articles per venue topic"),
    synth("synth-test-per-venue-topic", "Test articles per venue topic"),
    synth(
        "synth-topic-skew",
        "Geometric decay of topic sizes within a venue, in [0, 1)",
    ),
    synth("synth-tokens-per-article", "Title+abstract tokens per article"),
    synth("synth-keywords-per-article", "Keywords per article"),
    synth("synth-noise", "Probability that a token is shared noise"),
    synth("synth-authors-per-venue", "Authors per venue"),
    synth("synth-authors-per-article", "Authors per article"),
    synth(
        "synth-loyalty",
        "Probability that an author comes from the article's venue",
    ),
    synth("synth-train-year", "Year of training articles"),
    synth("synth-test-year", "Year of test articles"),
    synth("synth-data-seed", "Generator seed"),
];

pub fn key(name: &str) -> Option<&'static Key> {
    KEYS.iter().find(|k| k.name == name)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub artifacts: PathBuf,
    pub stopwords: Option<PathBuf>,
    pub min_venue_articles: usize,
    pub train_through_year: i32,
    pub exclude_venues: Vec<String>,
    pub prep: PrepParams,
    pub cluster: ClusterParams,
    pub strategy: ProfileStrategy,
    pub author_strategy: ProfileStrategy,
    pub features: Features,
    pub retrieval: RetrievalParams,
    pub lambda_blend: f64,
    pub sweep_lambda: Option<String>,
    pub cutoffs: Vec<usize>,
    pub mrr_cutoff: usize,
    pub top: usize,
    pub synth: SynthSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = PipelineConfig::default();
        Self {
            corpus: None,
            artifacts: PathBuf::from("artifacts"),
            stopwords: None,
            min_venue_articles: 100,
            train_through_year: 2015,
            exclude_venues: Vec::new(),
            prep: p.prep,
            cluster: p.cluster,
            strategy: p.strategy,
            author_strategy: p.author_strategy,
            features: p.features,
            retrieval: p.retrieval,
            lambda_blend: 0.75,
            sweep_lambda: None,
            cutoffs: p.eval.cutoffs,
            mrr_cutoff: p.eval.mrr_cutoff,
            top: 10,
            synth: SynthSpec::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> CliResult<T> {
    value
        .parse()
        .map_err(|_| CliError::usage(format!("bad value `{value}` for `{key}`")))
}

fn parse_lib<T: FromStr<Err = venuerec::Error>>(value: &str) -> CliResult<T> {
    value.parse().map_err(CliError::from)
}

fn parse_bool(key: &str, value: &str) -> CliResult<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::usage(format!(
            "bad value `{value}` for `{key}` (expected true or false)"
        ))),
    }
}

fn list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

fn opt_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Applies one key. An empty value resets optional keys.
    pub fn set(&mut self, name: &str, value: &str) -> CliResult<()> {
        let v = value.trim();
        let s = &mut self.synth;
        match name {
            "corpus" => self.corpus = opt_path(v),
            "artifacts" => {
                self.artifacts = opt_path(v).ok_or_else(|| CliError::usage("`artifacts` must not be empty"))?
            }
            "stopwords" => self.stopwords = opt_path(v),
            "min-venue-articles" => self.min_venue_articles = parse(name, v)?,
            "train-through-year" => self.train_through_year = parse(name, v)?,
            "exclude-venues" => self.exclude_venues = list(v),
            "max-df" => self.prep.max_df = parse(name, v)?,
            "min-df" => self.prep.min_df = parse(name, v)?,
            "weighting" => self.prep.weighting = parse_lib::<Weighting>(v)?,
            "normalize" => self.prep.normalize = parse_bool(name, v)?,
            "k-method" => self.cluster.k_method = parse_lib::<KMethod>(v)?,
            "k" => {
                self.cluster.k = if v.is_empty() { None } else { Some(parse(name, v)?) };
                if self.cluster.k.is_some() {
                    self.cluster.k_method = KMethod::Fixed;
                }
            }
            "seed" => self.cluster.seed = parse(name, v)?,
            "max-iter" => self.cluster.max_iter = parse(name, v)?,
            "tol" => self.cluster.tol = parse(name, v)?,
            "strategy" => self.strategy = parse_lib(v)?,
            "author-strategy" => self.author_strategy = parse_lib(v)?,
            "features" => self.features = parse_lib(v)?,
            "lambda-s" => self.retrieval.lambda_s = parse(name, v)?,
            "weight-content" => self.retrieval.weights.content = parse(name, v)?,
            "weight-keywords" => self.retrieval.weights.keywords = parse(name, v)?,
            "weight-authors" => self.retrieval.weights.authors = parse(name, v)?,
            "depth" => self.retrieval.depth = parse(name, v)?,
            "lambda-blend" => self.lambda_blend = parse(name, v)?,
            "sweep-lambda" => self.sweep_lambda = (!v.is_empty()).then(|| v.to_string()),
            "cutoffs" => self.cutoffs = list(v).iter().map(|c| parse(name, c)).collect::<CliResult<_>>()?,
            "mrr-cutoff" => self.mrr_cutoff = parse(name, v)?,
            "top" => self.top = parse(name, v)?,
            "synth-n-venues" => s.n_venues = parse(name, v)?,
            "synth-topics-per-venue" => s.topics_per_venue = parse(name, v)?,
            "synth-vocab-per-topic" => s.vocab_per_topic = parse(name, v)?,
            "synth-shared-vocab" => s.shared_vocab_size = parse(name, v)?,
            "synth-n-themes" => s.n_themes = parse(name, v)?,
            "synth-theme-vocab" => s.theme_vocab_size = parse(name, v)?,
            "synth-theme-share" => s.theme_share = parse(name, v)?,
            "synth-train-per-venue-topic" => s.train_per_venue_topic = parse(name, v)?,
            "synth-test-per-venue-topic" => s.test_per_venue_topic = parse(name, v)?,
            "synth-topic-skew" => s.topic_skew = parse(name, v)?,
            "synth-tokens-per-article" => s.tokens_per_article = parse(name, v)?,
            "synth-keywords-per-article" => s.keywords_per_article = parse(name, v)?,
            "synth-noise" => s.noise = parse(name, v)?,
            "synth-authors-per-venue" => s.authors_per_venue = parse(name, v)?,
            "synth-authors-per-article" => s.authors_per_article = parse(name, v)?,
            "synth-loyalty" => s.loyalty = parse(name, v)?,
            "synth-train-year" => s.train_year = parse(name, v)?,
            "synth-test-year" => s.test_year = parse(name, v)?,
            "synth-data-seed" => s.seed = parse(name, v)?,
            _ => return Err(CliError::usage(format!("unknown config key `{name}`"))),
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> String {
        let s = &self.synth;
        match name {
            "corpus" => show_path(&self.corpus),
            "artifacts" => self.artifacts.display().to_string(),
            "stopwords" => show_path(&self.stopwords),
            "min-venue-articles" => self.min_venue_articles.to_string(),
            "train-through-year" => self.train_through_year.to_string(),
            "exclude-venues" => self.exclude_venues.join(","),
            "max-df" => self.prep.max_df.to_string(),
            "min-df" => self.prep.min_df.to_string(),
            "weighting" => self.prep.weighting.to_string(),
            "normalize" => self.prep.normalize.to_string(),
            "k-method" => self.cluster.k_method.to_string(),
            "k" => self.cluster.k.map(|k| k.to_string()).unwrap_or_default(),
            "seed" => self.cluster.seed.to_string(),
            "max-iter" => self.cluster.max_iter.to_string(),
            "tol" => self.cluster.tol.to_string(),
            "strategy" => self.strategy.to_string(),
            "author-strategy" => self.author_strategy.to_string(),
            "features" => self.features.to_string(),
            "lambda-s" => self.retrieval.lambda_s.to_string(),
            "weight-content" => self.retrieval.weights.content.to_string(),
            "weight-keywords" => self.retrieval.weights.keywords.to_string(),
            "weight-authors" => self.retrieval.weights.authors.to_string(),
            "depth" => self.retrieval.depth.to_string(),
            "lambda-blend" => self.lambda_blend.to_string(),
            "sweep-lambda" => self.sweep_lambda.clone().unwrap_or_default(),
            "cutoffs" => join(&self.cutoffs),
            "mrr-cutoff" => self.mrr_cutoff.to_string(),
            "top" => self.top.to_string(),
            "synth-n-venues" => s.n_venues.to_string(),
            "synth-topics-per-venue" => s.topics_per_venue.to_string(),
            "synth-vocab-per-topic" => s.vocab_per_topic.to_string(),
            "synth-shared-vocab" => s.shared_vocab_size.to_string(),
            "synth-n-themes" => s.n_themes.to_string(),
            "synth-theme-vocab" => s.theme_vocab_size.to_string(),
            "synth-theme-share" => s.theme_share.to_string(),
            "synth-train-per-venue-topic" => s.train_per_venue_topic.to_string(),
            "synth-test-per-venue-topic" => s.test_per_venue_topic.to_string(),
            "synth-topic-skew" => s.topic_skew.to_string(),
            "synth-tokens-per-article" => s.tokens_per_article.to_string(),
            "synth-keywords-per-article" => s.keywords_per_article.to_string(),
            "synth-noise" => s.noise.to_string(),
            "synth-authors-per-venue" => s.authors_per_venue.to_string(),
            "synth-authors-per-article" => s.authors_per_article.to_string(),
            "synth-loyalty" => s.loyalty.to_string(),
            "synth-train-year" => s.train_year.to_string(),
            "synth-test-year" => s.test_year.to_string(),
            "synth-data-seed" => s.seed.to_string(),
            _ => unreachable!("unknown config key {name}"),
        }
    }

    /// Applies `key = value` lines; `#` starts a comment line.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> CliResult<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("{origin}:{}: expected `key = value`", i + 1)))?;
            self.set(k.trim(), v)
                .map_err(|e| CliError::usage(format!("{origin}:{}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        let mut c = Self::default();
        c.apply_text(&text, &path.display().to_string())?;
        Ok(c)
    }

    /// The resolved configuration in the file format.
    pub fn to_text(&self, scope: Scope) -> String {
        let mut out = String::from("# venuerec configuration\n");
        for k in KEYS.iter().filter(|k| k.scope == scope) {
            let _ = writeln!(out, "# {}\n{} = {}", k.help, k.name, self.get(k.name));
        }
        out
    }

    pub fn lambdas(&self) -> CliResult<Vec<f64>> {
        match &self.sweep_lambda {
            Some(spec) => Ok(parse_sweep(spec)?),
            None => Ok(vec![self.lambda_blend]),
        }
    }

    /// Checks every run key; synthetic keys are checked by the generator.
    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Usage(msg));
        if self.min_venue_articles == 0 {
            return bad("min-venue-articles must be >= 1".into());
        }
        if !(self.prep.max_df > 0.0 && self.prep.max_df <= 1.0) {
            return bad(format!("max-df must be in (0, 1], got {}", self.prep.max_df));
        }
        if self.prep.min_df == 0 {
            return bad("min-df must be >= 1".into());
        }
        if self.cluster.k_method == KMethod::Fixed && self.cluster.k.is_none() {
            return bad("k-method fixed needs a value for k".into());
        }
        if self.cluster.k_method != KMethod::Fixed && self.cluster.k.is_some() {
            return bad(format!(
                "k is only used with k-method fixed, not {}",
                self.cluster.k_method
            ));
        }
        if self.cluster.k == Some(0) {
            return bad("k must be >= 1".into());
        }
        if self.cluster.max_iter == 0 {
            return bad("max-iter must be >= 1".into());
        }
        if !(self.cluster.tol.is_finite() && self.cluster.tol >= 0.0) {
            return bad(format!("tol must be >= 0, got {}", self.cluster.tol));
        }
        if !(self.retrieval.lambda_s > 0.0 && self.retrieval.lambda_s < 1.0) {
            return bad(format!("lambda-s must be in (0, 1), got {}", self.retrieval.lambda_s));
        }
        let w = self.retrieval.weights;
        for (name, x) in [
            ("weight-content", w.content),
            ("weight-keywords", w.keywords),
            ("weight-authors", w.authors),
        ] {
            if !(x.is_finite() && x >= 0.0) {
                return bad(format!("{name} must be >= 0, got {x}"));
            }
        }
        if self.retrieval.depth == 0 {
            return bad("depth must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.lambda_blend) {
            return bad(format!("lambda-blend must be in [0, 1], got {}", self.lambda_blend));
        }
        if self.lambdas()?.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return bad("sweep-lambda must stay within [0, 1]".into());
        }
        if self.cutoffs.is_empty() || self.cutoffs.contains(&0) {
            return bad("cutoffs must be a non-empty list of positive integers".into());
        }
        if self.mrr_cutoff == 0 || self.top == 0 {
            return bad("mrr-cutoff and top must be >= 1".into());
        }
        Ok(())
    }

    /// Profile strategies the configured features read.
    pub fn strategies(&self) -> Vec<ProfileStrategy> {
        let mut s = BTreeSet::from([self.strategy]);
        if self.features == Features::Combined {
            s.insert(self.author_strategy);
        }
        s.into_iter().collect()
    }

    pub fn pipeline(&self) -> CliResult<PipelineConfig> {
        Ok(PipelineConfig {
            prep: self.prep,
            cluster: self.cluster,
            strategy: self.strategy,
            author_strategy: self.author_strategy,
            features: self.features,
            retrieval: self.retrieval,
            eval: EvalOptions {
                cutoffs: self.cutoffs.clone(),
                mrr_cutoff: self.mrr_cutoff,
                lambdas: self.lambdas()?,
            },
        })
    }
}
