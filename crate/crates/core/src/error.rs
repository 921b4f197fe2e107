use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid literal `{0}`")]
    Literal(String),

    #[error("unknown family `{0}`")]
    UnknownFamily(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    /// A bounded scan ran out of candidates. This reports the sweep bound,
    /// not a refutation of anything.
    #[error("cap exhausted after index {last_index}: {reason}")]
    CapExhausted { last_index: u64, reason: String },

    #[error("ill-conditioned fit (condition number {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::UnknownFamily(_)
            | Error::InvalidParameter(_)
            | Error::Literal(_)
            | Error::Parse { .. } => 2,
            Error::Precondition(_) | Error::InvalidOperator(_) | Error::IllConditioned { .. } => 3,
            Error::CapExhausted { .. } => 4,
            Error::Invariant(_) => 5,
            Error::Io(_) | Error::Json(_) => 1,
        }
    }
}
