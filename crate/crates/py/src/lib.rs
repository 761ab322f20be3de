//! Python bindings: corpora, synthetic data, training, recommendation,
//! evaluation, fusion and metrics.

use std::collections::HashMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use venuerec_core::cluster::{heuristic_k as core_heuristic_k, KMethod};
use venuerec_core::corpus::{self as corpus_mod, Article, CorpusSchema, SplitSpec};
use venuerec_core::eval::{self, EvalOptions};
use venuerec_core::fusion::{self, FusionParams, VenueRanking};
use venuerec_core::index::RankedList;
use venuerec_core::pipeline::{self, PipelineConfig, TrainedModel};
use venuerec_core::profile::{ArticleFields, ProfileStrategy};
use venuerec_core::recommend::Features;
use venuerec_core::synthgen::{generate, SynthSpec};
use venuerec_core::textprep::{Analyzer, Weighting};

/// `(rank, venue, fused, content, author)`.
type Row = (usize, String, f64, f64, f64);

fn err(e: venuerec_core::Error) -> PyErr {
    use venuerec_core::Error as E;
    match e {
        E::Io { .. } => PyOSError::new_err(e.to_string()),
        E::InvalidParam(_) | E::Config(_) | E::UnknownField(_) | E::Synth(_) | E::DuplicateArticle(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr<Err = venuerec_core::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(err)
}

/// An immutable set of articles.
#[pyclass(frozen, module = "venuerec")]
pub struct Corpus {
    inner: corpus_mod::Corpus,
}

fn item<'py, T: FromPyObjectOwned<'py>>(d: &Bound<'py, PyDict>, key: &str) -> PyResult<Option<T>> {
    match d.get_item(key)? {
        Some(v) if !v.is_none() => Ok(Some(v.extract().map_err(Into::into)?)),
        _ => Ok(None),
    }
}

fn required<'py, T: FromPyObjectOwned<'py>>(d: &Bound<'py, PyDict>, key: &str) -> PyResult<T> {
    item(d, key)?.ok_or_else(|| PyValueError::new_err(format!("record lacks `{key}`")))
}

#[pymethods]
impl Corpus {
    /// Loads a line-delimited JSON corpus; malformed lines are skipped.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let (inner, _) = corpus_mod::load_corpus(&path, &CorpusSchema::default()).map_err(err)?;
        Ok(Self { inner })
    }

    /// Builds a corpus from dicts with keys id, venue, year and optionally
    /// title_abstract, keywords, authors.
    #[staticmethod]
    fn from_records(records: Vec<Bound<'_, PyDict>>) -> PyResult<Self> {
        let articles = records
            .iter()
            .map(|d| {
                Ok(Article {
                    article_id: required(d, "id")?,
                    venue_id: required(d, "venue")?,
                    year: required(d, "year")?,
                    title_abstract: item(d, "title_abstract")?.unwrap_or_default(),
                    keywords: item(d, "keywords")?.unwrap_or_default(),
                    authors: item(d, "authors")?.unwrap_or_default(),
                })
            })
            .collect::<PyResult<Vec<_>>>()?;
        Ok(Self {
            inner: corpus_mod::Corpus::new(articles).map_err(err)?,
        })
    }

    fn records<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyList>> {
        let out = PyList::empty(py);
        for a in self.inner.articles() {
            let d = PyDict::new(py);
            d.set_item("id", &a.article_id)?;
            d.set_item("venue", &a.venue_id)?;
            d.set_item("year", a.year)?;
            d.set_item("title_abstract", &a.title_abstract)?;
            d.set_item("keywords", &a.keywords)?;
            d.set_item("authors", &a.authors)?;
            out.append(d)?;
        }
        Ok(out)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(err)
    }

    /// Article count per venue.
    fn venues(&self) -> HashMap<String, usize> {
        self.inner.venues().iter().map(|(k, v)| (k.clone(), *v)).collect()
    }

    fn filter_venues(&self, min_articles: usize) -> PyResult<Self> {
        Ok(Self {
            inner: corpus_mod::filter_venues(&self.inner, min_articles).map_err(err)?,
        })
    }

    /// `(train, test)` with train holding years up to `boundary_year`.
    fn split(&self, boundary_year: i32) -> PyResult<(Self, Self)> {
        let s = corpus_mod::split_by_year(&self.inner, SplitSpec { boundary_year }).map_err(err)?;
        Ok((Self { inner: s.train }, Self { inner: s.test }))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Corpus({} articles, {} venues)",
            self.inner.len(),
            self.inner.n_venues()
        )
    }
}

/// Synthetic corpus with planted venue topics. Returns the corpus and the
/// `(venue, topic)` label of each article.
#[pyfunction]
#[pyo3(signature = (n_venues=20, topics_per_venue=3, noise=0.5, loyalty=0.6, topic_skew=0.7, seed=2016))]
fn synthetic_corpus(
    n_venues: usize,
    topics_per_venue: usize,
    noise: f64,
    loyalty: f64,
    topic_skew: f64,
    seed: u64,
) -> PyResult<(Corpus, Vec<(usize, usize)>)> {
    let spec = SynthSpec {
        n_venues,
        topics_per_venue,
        noise,
        loyalty,
        topic_skew,
        seed,
        ..SynthSpec::default()
    };
    let s = generate(&spec).map_err(err)?;
    Ok((Corpus { inner: s.corpus }, s.planted))
}

/// Analyzed title+abstract tokens.
#[pyfunction]
fn tokenize(text: &str) -> Vec<String> {
    Analyzer::default().tokenize_and_stem(text)
}

/// Number of clusters from `m` articles, `t` terms and `e` nonzero entries.
#[pyfunction]
#[pyo3(signature = (method, m, t=0, e=0, k=None))]
fn heuristic_k(method: &str, m: usize, t: usize, e: usize, k: Option<usize>) -> PyResult<usize> {
    core_heuristic_k(parse::<KMethod>(method)?, m, t, e, k).map_err(err)
}

#[pyfunction]
fn accuracy_at(ranks: Vec<Option<usize>>, x: usize) -> PyResult<f64> {
    eval::accuracy_at(&ranks, x).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (ranks, cutoff=40))]
fn mrr(ranks: Vec<Option<usize>>, cutoff: usize) -> PyResult<f64> {
    eval::mrr(&ranks, cutoff).map_err(err)
}

/// Fuses scored documents into venue scores; `venue_of` maps doc to venue.
#[pyfunction]
fn comb_lgdcs(scored: Vec<(String, f64)>, venue_of: HashMap<String, String>) -> PyResult<Vec<(String, f64)>> {
    if let Some((d, _)) = scored.iter().find(|(d, _)| !venue_of.contains_key(d)) {
        return Err(PyValueError::new_err(format!("no venue for document `{d}`")));
    }
    let n = scored.len();
    let ranked = RankedList::from_scores(scored, n);
    Ok(fusion::comb_lgdcs(&ranked, &venue_of).entries().to_vec())
}

#[pyfunction]
fn normalize_max(scores: Vec<(String, f64)>) -> Vec<(String, f64)> {
    fusion::normalize_max(&VenueRanking::from_scores(scores))
        .entries()
        .to_vec()
}

/// Blends max-normalized content and author venue scores.
#[pyfunction]
#[pyo3(signature = (content, author, lambda_blend=0.75))]
fn comb_linear(
    content: Vec<(String, f64)>,
    author: Vec<(String, f64)>,
    lambda_blend: f64,
) -> PyResult<Vec<(String, f64)>> {
    let c = VenueRanking::from_scores(content);
    let a = VenueRanking::from_scores(author);
    let r = fusion::comb_linear(&c, &a, FusionParams::new(lambda_blend).map_err(err)?).map_err(err)?;
    Ok(r.entries().to_vec())
}

/// A trained recommender.
#[pyclass(frozen, module = "venuerec")]
pub struct Model {
    model: TrainedModel,
    config: PipelineConfig,
}

#[pymethods]
impl Model {
    #[new]
    #[pyo3(signature = (
        train, strategy="gp", features="combined", author_strategy="dp", k_method="kaufman",
        k=None, min_df=750, max_df=0.9, weighting="tfidf", seed=42, lambda_s=0.1, depth=1000
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        py: Python<'_>,
        train: &Corpus,
        strategy: &str,
        features: &str,
        author_strategy: &str,
        k_method: &str,
        k: Option<usize>,
        min_df: usize,
        max_df: f64,
        weighting: &str,
        seed: u64,
        lambda_s: f64,
        depth: usize,
    ) -> PyResult<Self> {
        let mut config = PipelineConfig {
            strategy: parse::<ProfileStrategy>(strategy)?,
            author_strategy: parse::<ProfileStrategy>(author_strategy)?,
            features: parse::<Features>(features)?,
            ..PipelineConfig::default()
        };
        config.cluster.k_method = if k.is_some() { KMethod::Fixed } else { parse(k_method)? };
        config.cluster.k = k;
        config.cluster.seed = seed;
        config.prep.min_df = min_df;
        config.prep.max_df = max_df;
        config.prep.weighting = parse::<Weighting>(weighting)?;
        config.retrieval.lambda_s = lambda_s;
        config.retrieval.depth = depth;
        let corpus = &train.inner;
        let model = py
            .detach(|| pipeline::train(corpus, &Analyzer::default(), &config))
            .map_err(err)?;
        Ok(Self { model, config })
    }

    /// Number of clusters, when the model clusters.
    #[getter]
    fn k(&self) -> Option<usize> {
        self.model.k()
    }

    /// `(rank, venue, fused, content, author)` rows of the top venues.
    #[pyo3(signature = (title_abstract, keywords=Vec::new(), authors=Vec::new(), top=10, lambda_blend=0.75))]
    fn recommend(
        &self,
        title_abstract: &str,
        keywords: Vec<String>,
        authors: Vec<String>,
        top: usize,
        lambda_blend: f64,
    ) -> PyResult<Vec<Row>> {
        let fields = ArticleFields::from_parts(&Analyzer::default(), title_abstract, &keywords, &authors);
        let fusion = FusionParams::new(lambda_blend).map_err(err)?;
        let r = self
            .model
            .recommender
            .recommend(&fields, self.config.features, fusion)
            .map_err(err)?;
        Ok(r.rows(top))
    }

    /// One report dict per blend weight (a single one unless features are
    /// combined).
    #[pyo3(signature = (test, lambdas=vec![0.75]))]
    fn evaluate<'py>(&self, py: Python<'py>, test: &Corpus, lambdas: Vec<f64>) -> PyResult<Bound<'py, PyList>> {
        let setup = pipeline::eval_setup(&self.config, self.model.k());
        let options = EvalOptions {
            lambdas,
            ..EvalOptions::default()
        };
        let rec = &self.model.recommender;
        let corpus = &test.inner;
        let reports = py
            .detach(|| eval::evaluate(rec, corpus, &Analyzer::default(), &setup, &options))
            .map_err(err)?;
        let out = PyList::empty(py);
        for r in reports {
            let d = PyDict::new(py);
            d.set_item("fingerprint", r.fingerprint())?;
            d.set_item("lambda_blend", r.lambda_blend)?;
            for (x, v) in &r.acc_at {
                d.set_item(format!("acc@{x}"), v)?;
            }
            d.set_item("mrr", r.mrr)?;
            d.set_item("n_queries", r.n_queries)?;
            d.set_item("n_unseen", r.n_unseen)?;
            out.append(d)?;
        }
        Ok(out)
    }
}

#[pymodule]
fn venuerec(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Corpus>()?;
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(synthetic_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(heuristic_k, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy_at, m)?)?;
    m.add_function(wrap_pyfunction!(mrr, m)?)?;
    m.add_function(wrap_pyfunction!(comb_lgdcs, m)?)?;
    m.add_function(wrap_pyfunction!(normalize_max, m)?)?;
    m.add_function(wrap_pyfunction!(comb_linear, m)?)?;
    Ok(())
}
