use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("duplicate article id `{0}`")]
    DuplicateArticle(String),
    #[error("duplicate document id `{0}`")]
    DuplicateDoc(String),
    #[error("empty corpus: {0}")]
    EmptyCorpus(String),
    #[error("empty vocabulary: no term has {min_df} <= df <= {max_df_count}; relax --min-df or --max-df")]
    EmptyVocabulary { min_df: usize, max_df_count: usize },
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("clustering error: {0}")]
    Clustering(String),
    #[error("profile error: {0}")]
    Profile(String),
    #[error("unknown field `{0}` (expected content, keywords or authors)")]
    UnknownField(String),
    #[error("unknown document `{0}`")]
    UnknownDoc(String),
    #[error("ranking is not max-normalized (max score {0})")]
    NotNormalized(f64),
    #[error("no ranks to aggregate")]
    EmptyRanks,
    #[error("bad index file {path}: {reason}")]
    IndexFormat { path: PathBuf, reason: String },
    #[error("synthetic generator: {0}")]
    Synth(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error("config fingerprint mismatch for {stage}: artifacts were built with {found}, current config gives {expected}; re-run `{stage}`")]
    FingerprintMismatch {
        stage: String,
        expected: String,
        found: String,
    },
    #[error("parse error in {path} line {line}: {reason}")]
    Parse { path: PathBuf, line: usize, reason: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
