use std::path::PathBuf;

use thiserror::Error;

use crate::corpus::ParagraphId;
use crate::taxonomy::Language;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown persuasion technique `{0}`")]
    UnknownTechnique(String),

    #[error("unknown language code `{0}`")]
    UnknownLanguage(String),

    #[error("source and target language are both `{0}`")]
    SameLanguage(Language),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate paragraph id {0}")]
    DuplicateId(ParagraphId),

    #[error("unknown paragraph id {0}")]
    UnknownId(ParagraphId),

    #[error("invalid paragraph {id}: {reason}")]
    InvalidParagraph { id: ParagraphId, reason: String },

    #[error("augmented paragraph {id} is not allowed by the coverage matrix: {reason}")]
    CoverageViolation { id: ParagraphId, reason: String },

    #[error("missing language `{0}`")]
    MissingLanguage(Language),

    #[error("every backend call failed ({0} attempted)")]
    AllTranslationsFailed(usize),

    #[error("translation backend: {0}")]
    Backend(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("no ledger record for paraphrase {0}")]
    OrphanParaphrase(ParagraphId),

    #[error("score file schema violation: {0}")]
    Schema(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("incomplete design, missing cells: {}", .0.join(", "))]
    IncompleteDesign(Vec<String>),

    #[error("design matrix is rank deficient; aliased columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),

    #[error("model has no `{0}` term")]
    MissingTerm(String),

    #[error("{context}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.to_string(),
        }
    }
}
