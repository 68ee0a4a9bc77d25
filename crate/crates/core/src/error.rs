use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("edition {0} has no parseable verses")]
    EmptyEdition(String),

    #[error("edition {edition}: duplicate verse id {verse}")]
    DuplicateVerse { edition: String, verse: String },

    #[error("invalid verse id {0:?}")]
    InvalidVerseId(String),

    #[error("invalid edition id {0:?}")]
    InvalidEditionId(String),

    #[error("invalid unit {0:?}")]
    InvalidUnit(String),

    #[error("ngram order {0} is not one of 4, 8, 12")]
    InvalidNgramOrder(usize),

    #[error("duplicate edition id {0}")]
    DuplicateEdition(String),

    #[error("unknown edition {0}")]
    UnknownEdition(String),

    #[error("need at least {needed} editions to pick pivots, have {available}")]
    TooFewEditions { needed: usize, available: usize },

    #[error("requested {requested} test verses but only {available} verses are available")]
    InsufficientVerses { requested: usize, available: usize },

    #[error("edition pair {0} / {1} shares no verses")]
    NoSharedVerses(String, String),

    #[error("invalid contingency counts c={c} f_s={f_s} f_t={f_t} N={n}")]
    InvalidContingency { c: u64, f_s: u64, f_t: u64, n: u64 },

    #[error("edge {0} -- {1} is not pivot-pivot or pivot-target")]
    InvalidEdge(String, String),

    #[error("edge {left} -- {right} has {links} links but zero cooccurring verses")]
    InconsistentCounts {
        left: String,
        right: String,
        links: f64,
    },

    #[error("clique enumeration aborted: {0}")]
    CliqueLimit(String),

    #[error("empty vocabulary after min-count filtering")]
    EmptyVocabulary,

    #[error("embedding space has no units")]
    EmptySpace,

    #[error("unit {0} is not in the embedding space")]
    OutOfVocabulary(String),

    #[error("malformed embedding file at line {line}: {reason}")]
    MalformedSpace { line: usize, reason: String },

    #[error("training data contains a single class")]
    SingleClass,

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{required} required: stage `{stage}` needs its output")]
    MissingStage { stage: String, required: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
