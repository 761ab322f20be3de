//! End-to-end training and evaluation in memory.

use rayon::prelude::*;

use crate::cluster::{heuristic_k, kmeans, ClusteringResult, KMeansParams, KMethod};
use crate::corpus::Corpus;
use crate::error::Result;
use crate::eval::{evaluate, EvalOptions, EvalReport, EvalSetup};
use crate::index::FieldedIndex;
use crate::profile::{build_profiles, ProfileStrategy};
use crate::recommend::{Features, Recommender, RetrievalParams};
use crate::textprep::{build_vocabulary, nonzero_entries, vectorize, Analyzer, DocVector, Vocabulary, Weighting};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrepParams {
    pub max_df: f64,
    pub min_df: usize,
    pub weighting: Weighting,
    pub normalize: bool,
}

impl Default for PrepParams {
    fn default() -> Self {
        Self {
            max_df: 0.9,
            min_df: 750,
            weighting: Weighting::TfIdf,
            normalize: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterParams {
    pub k_method: KMethod,
    /// Required for `KMethod::Fixed`.
    pub k: Option<usize>,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            k_method: KMethod::Kaufman,
            k: None,
            seed: 42,
            max_iter: 300,
            tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub prep: PrepParams,
    pub cluster: ClusterParams,
    pub strategy: ProfileStrategy,
    /// Profiles behind the author ranking of combined features.
    pub author_strategy: ProfileStrategy,
    pub features: Features,
    pub retrieval: RetrievalParams,
    pub eval: EvalOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            prep: PrepParams::default(),
            cluster: ClusterParams::default(),
            strategy: ProfileStrategy::Grouped,
            author_strategy: ProfileStrategy::Distributed,
            features: Features::Combined,
            retrieval: RetrievalParams::default(),
            eval: EvalOptions::default(),
        }
    }
}

impl PipelineConfig {
    pub fn needs_clustering(&self) -> bool {
        self.strategy == ProfileStrategy::Grouped
            || (self.features == Features::Combined && self.author_strategy == ProfileStrategy::Grouped)
    }

    fn separate_author_index(&self) -> bool {
        self.features == Features::Combined && self.author_strategy != self.strategy
    }
}

/// Clustering features of the training articles.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub vocab: Vocabulary,
    pub vectors: Vec<DocVector>,
}

impl Prepared {
    /// Articles m.
    pub fn m(&self) -> usize {
        self.vectors.len()
    }

    /// Terms t.
    pub fn t(&self) -> usize {
        self.vocab.len()
    }

    /// Nonzero document-term entries e.
    pub fn e(&self) -> usize {
        nonzero_entries(&self.vectors)
    }
}

/// Title+abstract tokens of every training article, in corpus order.
pub fn clustering_tokens(train: &Corpus, analyzer: &Analyzer) -> Vec<Vec<String>> {
    train
        .articles()
        .par_iter()
        .map(|a| analyzer.tokenize_and_stem(&a.title_abstract))
        .collect()
}

pub fn vectorize_all(
    train: &Corpus,
    tokens: &[Vec<String>],
    vocab: &Vocabulary,
    params: &PrepParams,
) -> Vec<DocVector> {
    train
        .articles()
        .par_iter()
        .zip(tokens.par_iter())
        .map(|(a, toks)| vectorize(&a.article_id, toks, vocab, params.weighting, params.normalize))
        .collect()
}

pub fn prepare(train: &Corpus, analyzer: &Analyzer, params: &PrepParams) -> Result<Prepared> {
    let tokens = clustering_tokens(train, analyzer);
    let vocab = build_vocabulary(&tokens, params.max_df, params.min_df)?;
    let vectors = vectorize_all(train, &tokens, &vocab, params);
    Ok(Prepared { vocab, vectors })
}

pub fn choose_k(prepared: &Prepared, params: &ClusterParams) -> Result<usize> {
    heuristic_k(params.k_method, prepared.m(), prepared.t(), prepared.e(), params.k)
}

pub fn cluster_articles(prepared: &Prepared, params: &ClusterParams) -> Result<ClusteringResult> {
    let k = choose_k(prepared, params)?;
    log::info!(
        "clustering m={} t={} e={} with k={k} ({})",
        prepared.m(),
        prepared.t(),
        prepared.e(),
        params.k_method
    );
    kmeans(
        &prepared.vectors,
        &KMeansParams {
            k,
            seed: params.seed,
            max_iter: params.max_iter,
            tol: params.tol,
        },
    )
}

pub fn build_index(
    train: &Corpus,
    strategy: ProfileStrategy,
    clustering: Option<&ClusteringResult>,
    analyzer: &Analyzer,
) -> Result<FieldedIndex> {
    let profiles = build_profiles(train, strategy, clustering, analyzer)?;
    FieldedIndex::build(&profiles)
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub recommender: Recommender,
    pub clustering: Option<ClusteringResult>,
}

impl TrainedModel {
    pub fn k(&self) -> Option<usize> {
        self.clustering.as_ref().map(|c| c.k)
    }
}

pub fn train(train: &Corpus, analyzer: &Analyzer, config: &PipelineConfig) -> Result<TrainedModel> {
    let clustering = if config.needs_clustering() {
        let prepared = prepare(train, analyzer, &config.prep)?;
        Some(cluster_articles(&prepared, &config.cluster)?)
    } else {
        None
    };
    let content_index = build_index(train, config.strategy, clustering.as_ref(), analyzer)?;
    let author_index = if config.separate_author_index() {
        Some(build_index(
            train,
            config.author_strategy,
            clustering.as_ref(),
            analyzer,
        )?)
    } else {
        None
    };
    Ok(TrainedModel {
        recommender: Recommender::new(content_index, author_index, config.retrieval)?,
        clustering,
    })
}

pub fn eval_setup(config: &PipelineConfig, k: Option<usize>) -> EvalSetup {
    EvalSetup {
        features: config.features,
        strategy: config.strategy,
        author_strategy: config.separate_author_index().then_some(config.author_strategy),
        k,
        seed: config.cluster.seed,
        lambda_s: config.retrieval.lambda_s,
        depth: config.retrieval.depth,
    }
}

/// Trains on `train`, evaluates on `test`.
pub fn run_evaluation(
    train_corpus: &Corpus,
    test: &Corpus,
    analyzer: &Analyzer,
    config: &PipelineConfig,
) -> Result<Vec<EvalReport>> {
    let model = train(train_corpus, analyzer, config)?;
    evaluate(
        &model.recommender,
        test,
        analyzer,
        &eval_setup(config, model.k()),
        &config.eval,
    )
}
