use std::io;

use thiserror::Error;

/// Why a sentence's head column does not describe a usable tree.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("no token is attached to the root")]
    NoRoot,
    #[error("tokens {0} and {1} are both attached to the root")]
    MultipleRoots(usize, usize),
    #[error("token {token} has head {head}, outside 0..={len}")]
    HeadOutOfRange { token: usize, head: usize, len: usize },
    #[error("token {0} is its own head")]
    SelfLoop(usize),
    #[error("cycle through token {0}")]
    Cycle(usize),
    #[error("arc {head}->{dependent} crosses another arc")]
    NonProjective { head: usize, dependent: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("sentence {sentence}: {reason}")]
    InvalidTree { sentence: usize, reason: TreeError },

    #[error("cannot derive an arc-standard oracle: {0}")]
    Oracle(String),

    #[error("the input bag is empty")]
    EmptyBag,

    #[error("illegal action {action} in state {state}")]
    IllegalAction { action: String, state: String },

    #[error("state is not terminal")]
    NotTerminal,

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("non-finite loss at epoch {epoch}, batch {batch}: {detail}")]
    NonFinite {
        epoch: usize,
        batch: usize,
        detail: String,
    },

    #[error("exhaustive search refused: bag of {n} words exceeds the bound of {bound}")]
    SearchTooLarge { n: usize, bound: usize },

    #[error("unknown action {0:?}")]
    UnknownAction(String),

    #[error("{refs} references but {hyps} hypotheses")]
    LengthMismatch { refs: usize, hyps: usize },

    #[error("model file: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    InFile {
        path: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Short machine-parsable reason code, used by the command line tool.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::InvalidTree { .. } => "tree",
            Error::Oracle(_) => "oracle",
            Error::EmptyBag => "empty-bag",
            Error::IllegalAction { .. } => "illegal-action",
            Error::NotTerminal => "not-terminal",
            Error::Config(_) => "config",
            Error::Data(_) => "data",
            Error::NonFinite { .. } => "non-finite",
            Error::SearchTooLarge { .. } => "search-bound",
            Error::UnknownAction(_) => "unknown-action",
            Error::LengthMismatch { .. } => "length-mismatch",
            Error::Format(_) | Error::Json(_) => "model-format",
            Error::Io(_) => "io",
            Error::InFile { source, .. } => source.code(),
        }
    }

    /// Attaches the file the error came from.
    pub fn in_file(self, path: impl AsRef<std::path::Path>) -> Error {
        Error::InFile {
            path: path.as_ref().display().to_string(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
