use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Failure of a command, classified by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Data(_) => 2,
            Self::Internal(_) => 3,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Self::Data(msg.into())
    }
}

impl From<venuerec::Error> for CliError {
    fn from(e: venuerec::Error) -> Self {
        use venuerec::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidParam(_) | E::Config(_) | E::UnknownField(_) => Self::Usage(msg),
            E::NotNormalized(_) => Self::Internal(msg),
            E::Io { .. }
            | E::DuplicateArticle(_)
            | E::DuplicateDoc(_)
            | E::EmptyCorpus(_)
            | E::EmptyVocabulary { .. }
            | E::Clustering(_)
            | E::Profile(_)
            | E::UnknownDoc(_)
            | E::EmptyRanks
            | E::IndexFormat { .. }
            | E::Synth(_)
            | E::MissingArtifact(_)
            | E::FingerprintMismatch { .. }
            | E::Parse { .. } => Self::Data(msg),
        }
    }
}

pub(crate) fn io_err(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("i/o error on {}: {e}", path.display()))
}
