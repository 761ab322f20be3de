//! Pipeline stages over an artifacts directory.
//!
//! Layout (one directory per stage, each with `manifest.json` and the
//! resolved `config.txt`):
//!
//! ```text
//! ingest/        train.jsonl test.jsonl
//! prep/          vocabulary.tsv
//! cluster/       clusters.tsv
//! profiles/<s>/  profiles.jsonl
//! index/<s>/     data/ (fielded index files)
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::Value;
use venuerec::cluster::{heuristic_k, ClusteringResult, KMethod};
use venuerec::corpus::{exclude_venues, filter_venues, load_corpus, split_by_year, Corpus, CorpusSchema, SplitSpec};
use venuerec::eval::{evaluate, reports_to_csv};
use venuerec::index::FieldedIndex;
use venuerec::pipeline::{cluster_articles, clustering_tokens, eval_setup, vectorize_all, Prepared};
use venuerec::profile::{build_profiles, load_profiles, save_profiles, ArticleFields, ProfileStrategy};
use venuerec::recommend::{Features, Recommender};
use venuerec::textprep::{build_vocabulary, nonzero_entries, Analyzer, Vocabulary};

use crate::artifacts::{sha256_file, write_atomic, Manifest, Staging};
use crate::config::{RunConfig, Scope};
use crate::error::{io_err, CliError, CliResult};

pub const CONFIG_FILE: &str = "config.txt";
const TRAIN: &str = "train.jsonl";
const TEST: &str = "test.jsonl";
const VOCAB: &str = "vocabulary.tsv";
const CLUSTERS: &str = "clusters.tsv";
const PROFILES: &str = "profiles.jsonl";
const INDEX_DATA: &str = "data";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Ingest,
    Prep,
    Cluster,
    Profiles(ProfileStrategy),
    Index(ProfileStrategy),
}

impl Stage {
    pub fn name(self) -> String {
        match self {
            Self::Ingest => "ingest".into(),
            Self::Prep => "prep".into(),
            Self::Cluster => "cluster".into(),
            Self::Profiles(s) => format!("profiles/{s}"),
            Self::Index(s) => format!("index/{s}"),
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name.split_once('/') {
            None => match name {
                "ingest" => Some(Self::Ingest),
                "prep" => Some(Self::Prep),
                "cluster" => Some(Self::Cluster),
                _ => None,
            },
            Some((stage, s)) => {
                let s = s.parse().ok()?;
                match stage {
                    "profiles" => Some(Self::Profiles(s)),
                    "index" => Some(Self::Index(s)),
                    _ => None,
                }
            }
        }
    }

    /// The command line that rebuilds this stage.
    fn command(self) -> String {
        match self {
            Self::Profiles(s) => format!("venuerec profiles --strategy {s}"),
            Self::Index(s) => format!("venuerec index --strategy {s}"),
            _ => format!("venuerec {}", self.name()),
        }
    }

    fn what(self) -> String {
        match self {
            Self::Ingest => "training split".into(),
            Self::Prep => "vocabulary".into(),
            Self::Cluster => "clustering".into(),
            Self::Profiles(s) => format!("{s} profiles"),
            Self::Index(s) => format!("{s} index"),
        }
    }

    fn upstream(self) -> Vec<Stage> {
        match self {
            Self::Ingest => vec![],
            Self::Prep => vec![Self::Ingest],
            Self::Cluster => vec![Self::Prep, Self::Ingest],
            Self::Profiles(ProfileStrategy::Grouped) => vec![Self::Cluster, Self::Ingest],
            Self::Profiles(_) => vec![Self::Ingest],
            Self::Index(s) => vec![Self::Profiles(s)],
        }
    }
}

/// One command's view of an artifacts directory.
pub struct Workspace {
    pub config: RunConfig,
    verified: HashMap<Stage, Manifest>,
    analyzer: Option<Arc<Analyzer>>,
}

fn map<const N: usize>(pairs: [(&str, String); N]) -> BTreeMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn diff(a: &BTreeMap<String, String>, b: &BTreeMap<String, String>) -> String {
    let keys: std::collections::BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    keys.into_iter()
        .filter(|k| a.get(*k) != b.get(*k))
        .map(|k| format!("{k}={}", a.get(k).map_or("-", String::as_str)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn load_split(path: &Path) -> CliResult<Corpus> {
    let (corpus, report) = load_corpus(path, &CorpusSchema::default())?;
    if report.skipped > 0 {
        return Err(CliError::data(format!(
            "{} has {} malformed records; re-run `venuerec ingest`",
            path.display(),
            report.skipped
        )));
    }
    Ok(corpus)
}

impl Workspace {
    pub fn new(config: RunConfig) -> Self {
        Self {
            config,
            verified: HashMap::new(),
            analyzer: None,
        }
    }

    pub fn dir(&self, stage: Stage) -> PathBuf {
        self.config.artifacts.join(stage.name())
    }

    fn analyzer(&mut self) -> CliResult<Arc<Analyzer>> {
        if self.analyzer.is_none() {
            self.analyzer = Some(Arc::new(match &self.config.stopwords {
                Some(p) => Analyzer::from_stopword_file(p)?,
                None => Analyzer::default(),
            }));
        }
        Ok(self.analyzer.clone().expect("just set"))
    }

    fn stopwords_id(&self) -> CliResult<String> {
        match &self.config.stopwords {
            Some(p) => sha256_file(p),
            None => Ok("bundled".into()),
        }
    }

    /// Configuration values a stage depends on.
    fn params(&self, stage: Stage) -> CliResult<BTreeMap<String, String>> {
        let c = &self.config;
        Ok(match stage {
            Stage::Ingest => {
                let mut excluded = c.exclude_venues.clone();
                excluded.sort();
                excluded.dedup();
                map([
                    ("min-venue-articles", c.get("min-venue-articles")),
                    ("train-through-year", c.get("train-through-year")),
                    ("exclude-venues", excluded.join(",")),
                ])
            }
            Stage::Prep => map([
                ("max-df", c.get("max-df")),
                ("min-df", c.get("min-df")),
                ("weighting", c.get("weighting")),
                ("normalize", c.get("normalize")),
                ("stopwords", self.stopwords_id()?),
            ]),
            Stage::Cluster => map([
                ("k-method", c.get("k-method")),
                ("k", c.get("k")),
                ("seed", c.get("seed")),
                ("max-iter", c.get("max-iter")),
                ("tol", c.get("tol")),
            ]),
            Stage::Profiles(s) => map([("strategy", s.to_string()), ("stopwords", self.stopwords_id()?)]),
            Stage::Index(s) => map([("strategy", s.to_string())]),
        })
    }

    /// Loads the manifest of `stage` and checks it against the current
    /// config, its files and its own upstream chain.
    pub fn verify(&mut self, stage: Stage) -> CliResult<Manifest> {
        if let Some(m) = self.verified.get(&stage) {
            return Ok(m.clone());
        }
        let dir = self.dir(stage);
        let m = Manifest::load(&dir)?.ok_or_else(|| {
            CliError::data(format!(
                "missing {}: {} has no artifacts; run `{}` first",
                stage.what(),
                dir.display(),
                stage.command()
            ))
        })?;
        let want = self.params(stage)?;
        if m.params != want {
            return Err(CliError::data(format!(
                "config fingerprint mismatch for {}: artifacts were built with {}, current config gives {}; re-run `{}`",
                stage.name(),
                diff(&m.params, &want),
                diff(&want, &m.params),
                stage.command()
            )));
        }
        if let (Stage::Ingest, Some(corpus)) = (stage, &self.config.corpus) {
            let now = sha256_file(corpus)?;
            if m.inputs.get("corpus") != Some(&now) {
                return Err(CliError::data(format!(
                    "config fingerprint mismatch for ingest: {} differs from the corpus that was ingested; re-run `venuerec ingest`",
                    corpus.display()
                )));
            }
        }
        m.verify_outputs(&dir)?;
        for (name, fp) in &m.upstream {
            let up = Stage::from_name(name)
                .ok_or_else(|| CliError::data(format!("manifest of {} names unknown stage `{name}`", stage.name())))?;
            let um = self.verify(up)?;
            if &um.fingerprint != fp {
                return Err(CliError::data(format!(
                    "config fingerprint mismatch for {}: it was built from {name} {fp}, which is now {}; re-run `{}`",
                    stage.name(),
                    um.fingerprint,
                    stage.command()
                )));
            }
        }
        self.verified.insert(stage, m.clone());
        Ok(m)
    }

    fn begin(&mut self, stage: Stage) -> CliResult<(Staging, Manifest)> {
        let mut upstream = BTreeMap::new();
        for up in stage.upstream() {
            upstream.insert(up.name(), self.verify(up)?.fingerprint);
        }
        let mut inputs = BTreeMap::new();
        if stage == Stage::Ingest {
            let corpus = self
                .config
                .corpus
                .as_ref()
                .ok_or_else(|| CliError::usage("ingest needs --corpus"))?;
            inputs.insert("corpus".to_string(), sha256_file(corpus)?);
        }
        let manifest = Manifest::new(&stage.name(), self.params(stage)?, inputs, upstream);
        let staging = Staging::new(&self.dir(stage))?;
        fs::write(staging.path(CONFIG_FILE), self.config.to_text(Scope::Run))
            .map_err(|e| io_err(&staging.path(CONFIG_FILE), e))?;
        Ok((staging, manifest))
    }

    fn finish(&mut self, stage: Stage, staging: Staging, manifest: Manifest) -> CliResult<String> {
        let m = staging.commit(manifest)?;
        let mut out = format!("{}\t{}\n", m.stage, m.fingerprint);
        for (k, v) in &m.summary {
            let _ = writeln!(out, "  {k}\t{v}");
        }
        log::info!("{} done ({})", m.stage, m.fingerprint);
        self.verified.insert(stage, m);
        Ok(out)
    }

    fn file(&self, stage: Stage, name: &str) -> PathBuf {
        self.dir(stage).join(name)
    }

    pub fn ingest(&mut self) -> CliResult<String> {
        let (staging, mut m) = self.begin(Stage::Ingest)?;
        let c = &self.config;
        let path = c.corpus.as_ref().expect("checked in begin");
        let (mut corpus, report) = load_corpus(path, &CorpusSchema::default())?;
        if !c.exclude_venues.is_empty() {
            corpus = exclude_venues(&corpus, &c.exclude_venues)?;
        }
        let corpus = filter_venues(&corpus, c.min_venue_articles)?;
        let split = split_by_year(
            &corpus,
            SplitSpec {
                boundary_year: c.train_through_year,
            },
        )?;
        split.train.save(&staging.path(TRAIN))?;
        split.test.save(&staging.path(TEST))?;
        m.summary = map([
            ("skipped-records", report.skipped.to_string()),
            ("venues", corpus.n_venues().to_string()),
            ("train-articles", split.train.len().to_string()),
            ("test-articles", split.test.len().to_string()),
            (
                "test-articles-unseen-venue",
                split.unseen_venue_articles.len().to_string(),
            ),
        ]);
        self.finish(Stage::Ingest, staging, m)
    }

    fn prepared(&mut self, vocab: Vocabulary) -> CliResult<Prepared> {
        let train = load_split(&self.file(Stage::Ingest, TRAIN))?;
        let an = self.analyzer()?;
        let tokens = clustering_tokens(&train, &an);
        let vectors = vectorize_all(&train, &tokens, &vocab, &self.config.prep);
        Ok(Prepared { vocab, vectors })
    }

    pub fn prep(&mut self) -> CliResult<String> {
        let (staging, mut m) = self.begin(Stage::Prep)?;
        let train = load_split(&self.file(Stage::Ingest, TRAIN))?;
        let an = self.analyzer()?;
        let p = self.config.prep;
        let tokens = clustering_tokens(&train, &an);
        let vocab = build_vocabulary(&tokens, p.max_df, p.min_df)?;
        vocab.save(&staging.path(VOCAB))?;
        let vectors = vectorize_all(&train, &tokens, &vocab, &p);
        let (mm, t, e) = (vectors.len(), vocab.len(), nonzero_entries(&vectors));
        m.summary = map([
            ("m", mm.to_string()),
            ("t", t.to_string()),
            ("e", e.to_string()),
            ("k-can", heuristic_k(KMethod::Can, mm, t, e, None)?.to_string()),
            ("k-kaufman", heuristic_k(KMethod::Kaufman, mm, t, e, None)?.to_string()),
        ]);
        self.finish(Stage::Prep, staging, m)
    }

    pub fn cluster(&mut self) -> CliResult<String> {
        let (staging, mut m) = self.begin(Stage::Cluster)?;
        let vocab = Vocabulary::load(&self.file(Stage::Prep, VOCAB))?;
        let prepared = self.prepared(vocab)?;
        let result = cluster_articles(&prepared, &self.config.cluster)?;
        result.save(&staging.path(CLUSTERS))?;
        m.summary = map([
            ("k", result.k.to_string()),
            ("iterations", result.iterations.to_string()),
            ("inertia", format!("{:.6}", result.inertia)),
        ]);
        self.finish(Stage::Cluster, staging, m)
    }

    fn profiles_for(&mut self, s: ProfileStrategy) -> CliResult<String> {
        let stage = Stage::Profiles(s);
        let (staging, mut m) = self.begin(stage)?;
        let train = load_split(&self.file(Stage::Ingest, TRAIN))?;
        let clustering = match s {
            ProfileStrategy::Grouped => Some(ClusteringResult::load(&self.file(Stage::Cluster, CLUSTERS))?),
            _ => None,
        };
        let an = self.analyzer()?;
        let profiles = build_profiles(&train, s, clustering.as_ref(), &an)?;
        save_profiles(&profiles, &staging.path(PROFILES))?;
        m.summary = map([("documents", profiles.len().to_string())]);
        self.finish(stage, staging, m)
    }

    /// Profiles for every strategy the configured features need.
    pub fn profiles(&mut self) -> CliResult<String> {
        let mut out = String::new();
        for s in self.config.strategies() {
            out += &self.profiles_for(s)?;
        }
        Ok(out)
    }

    fn index_for(&mut self, s: ProfileStrategy) -> CliResult<String> {
        let stage = Stage::Index(s);
        let (staging, mut m) = self.begin(stage)?;
        let profiles = load_profiles(&self.file(Stage::Profiles(s), PROFILES))?;
        let index = FieldedIndex::build(&profiles)?;
        index.save(&staging.path(INDEX_DATA))?;
        let stats = index.stats();
        m.summary = map([
            ("documents", stats.n_docs.to_string()),
            ("venues", stats.n_venues.to_string()),
        ]);
        self.finish(stage, staging, m)
    }

    pub fn index(&mut self) -> CliResult<String> {
        let mut out = String::new();
        for s in self.config.strategies() {
            out += &self.index_for(s)?;
        }
        Ok(out)
    }

    /// Every stage the configured evaluation reads, in order.
    pub fn train(&mut self) -> CliResult<String> {
        let mut out = self.ingest()?;
        if self.config.pipeline()?.needs_clustering() {
            out += &self.prep()?;
            out += &self.cluster()?;
        }
        out += &self.profiles()?;
        out += &self.index()?;
        Ok(out)
    }

    pub fn inspect(&mut self) -> CliResult<String> {
        let stage = Stage::Index(self.config.strategy);
        let m = self.verify(stage)?;
        let index = FieldedIndex::load(&self.dir(stage).join(INDEX_DATA))?;
        Ok(format!(
            "index\t{}\nfingerprint\t{}\n{}",
            stage.name(),
            m.fingerprint,
            index.stats()
        ))
    }

    fn recommender(&mut self) -> CliResult<Recommender> {
        let c = self.config.clone();
        let mut load = |s: ProfileStrategy| -> CliResult<FieldedIndex> {
            self.verify(Stage::Index(s))?;
            Ok(FieldedIndex::load(&self.dir(Stage::Index(s)).join(INDEX_DATA))?)
        };
        let content = load(c.strategy)?;
        let author = if c.features == Features::Combined && c.author_strategy != c.strategy {
            Some(load(c.author_strategy)?)
        } else {
            None
        };
        Ok(Recommender::new(content, author, c.retrieval)?)
    }

    pub fn recommend(&mut self, query: &QueryInput) -> CliResult<String> {
        let an = self.analyzer()?;
        let fields = query.fields(&an)?;
        let rec = self.recommender()?;
        let lambda = venuerec::fusion::FusionParams::new(self.config.lambda_blend)?;
        let r = rec.recommend(&fields, self.config.features, lambda)?;
        let mut out = String::from("rank,venue_id,fused,content,author\n");
        for (rank, venue, fused, content, author) in r.rows(self.config.top) {
            let _ = writeln!(out, "{rank},{venue},{fused:.6},{content:.6},{author:.6}");
        }
        Ok(out)
    }

    /// Writes `<out>` (CSV), `<out>.txt` (text report) and `<out>.config.txt`.
    pub fn evaluate(&mut self, out: Option<&Path>) -> CliResult<String> {
        let c = self.config.clone();
        let pipeline = c.pipeline()?;
        let k = if c.strategies().contains(&ProfileStrategy::Grouped) {
            self.verify(Stage::Cluster)?;
            Some(ClusteringResult::load(&self.file(Stage::Cluster, CLUSTERS))?.k)
        } else {
            None
        };
        self.verify(Stage::Ingest)?;
        let rec = self.recommender()?;
        let test = load_split(&self.file(Stage::Ingest, TEST))?;
        let an = self.analyzer()?;
        let reports = evaluate(&rec, &test, &an, &eval_setup(&pipeline, k), &pipeline.eval)?;
        let csv = reports_to_csv(&reports);
        let text = reports.iter().map(|r| r.to_text()).collect::<Vec<_>>().join("\n");
        let out = out.map_or_else(|| c.artifacts.join("reports").join("evaluate.csv"), Path::to_path_buf);
        let sibling = |suffix: &str| {
            let mut s = out.clone().into_os_string();
            s.push(suffix);
            PathBuf::from(s)
        };
        write_atomic(&out, csv.as_bytes())?;
        write_atomic(&sibling(".txt"), text.as_bytes())?;
        write_atomic(&sibling(".config.txt"), c.to_text(Scope::Run).as_bytes())?;
        log::info!("wrote {}", out.display());
        Ok(text)
    }
}

/// The article `recommend` scores.
#[derive(Debug, Clone, PartialEq)]
pub enum QueryInput {
    /// A file holding one corpus-format record; `-` reads standard input.
    Record(PathBuf),
    Parts {
        text: String,
        keywords: Vec<String>,
        authors: Vec<String>,
    },
}

fn strings(obj: &serde_json::Map<String, Value>, key: &str) -> CliResult<Vec<String>> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(Vec::new()),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| {
                v.as_str()
                    .map(String::from)
                    .ok_or_else(|| CliError::data(format!("`{key}` must hold strings")))
            })
            .collect(),
        Some(_) => Err(CliError::data(format!("`{key}` is not an array"))),
    }
}

impl QueryInput {
    pub fn fields(&self, an: &Analyzer) -> CliResult<ArticleFields> {
        let fields = match self {
            Self::Parts {
                text,
                keywords,
                authors,
            } => ArticleFields::from_parts(an, text, keywords, authors),
            Self::Record(path) => {
                let text = if path.as_os_str() == "-" {
                    std::io::read_to_string(std::io::stdin()).map_err(|e| io_err(path, e))?
                } else {
                    fs::read_to_string(path).map_err(|e| io_err(path, e))?
                };
                let mut lines = text.lines().filter(|l| !l.trim().is_empty());
                let line = lines
                    .next()
                    .ok_or_else(|| CliError::data(format!("{} holds no record", path.display())))?;
                if lines.next().is_some() {
                    return Err(CliError::data(format!("{} holds more than one record", path.display())));
                }
                let v: Value =
                    serde_json::from_str(line).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
                let obj = v
                    .as_object()
                    .ok_or_else(|| CliError::data(format!("{}: record is not an object", path.display())))?;
                let ta = match obj.get("title_abstract") {
                    None | Some(Value::Null) => "",
                    Some(Value::String(s)) => s.as_str(),
                    Some(_) => return Err(CliError::data("`title_abstract` is not a string")),
                };
                ArticleFields::from_parts(an, ta, &strings(obj, "keywords")?, &strings(obj, "authors")?)
            }
        };
        if fields.content.is_empty() && fields.keywords.is_empty() && fields.authors.is_empty() {
            return Err(CliError::data("the article has no usable text, keywords or authors"));
        }
        Ok(fields)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_names_round_trip() {
        for s in [
            Stage::Ingest,
            Stage::Prep,
            Stage::Cluster,
            Stage::Profiles(ProfileStrategy::Grouped),
            Stage::Index(ProfileStrategy::Single),
        ] {
            assert_eq!(Stage::from_name(&s.name()), Some(s));
        }
        assert_eq!(Stage::from_name("index/xx"), None);
        assert_eq!(Stage::from_name("report"), None);
    }

    #[test]
    fn diff_lists_changed_keys() {
        let a = map([("min-df", "5".into()), ("max-df", "0.9".into())]);
        let b = map([("min-df", "6".into()), ("max-df", "0.9".into())]);
        assert_eq!(diff(&a, &b), "min-df=5");
    }

    #[test]
    fn record_query_reads_one_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("q.jsonl");
        fs::write(
            &p,
            r#"{"title_abstract": "Protein folding dynamics", "authors": ["A1"], "keywords": []}"#,
        )
        .unwrap();
        let f = QueryInput::Record(p.clone()).fields(&Analyzer::default()).unwrap();
        assert_eq!(f.authors.keys().collect::<Vec<_>>(), ["A1"]);
        assert!(f.content.contains_key("protein"));
        fs::write(&p, "{}\n{}\n").unwrap();
        assert!(QueryInput::Record(p).fields(&Analyzer::default()).is_err());
    }
}
