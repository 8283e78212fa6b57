use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error in {source_name} at line {line}, column {column}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid {what}: {message}")]
    Validation { what: &'static str, message: String },

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("input of {0} items exceeds the limit of {1}")]
    TooLarge(usize, usize),

    #[error("unknown unit id {0}")]
    UnknownUnit(usize),

    #[error("{0}")]
    Infeasible(String),

    #[error("search budget exhausted after {nodes} nodes: {message}")]
    BudgetExhausted { nodes: u64, message: String },

    #[error("enumeration cap of {cap} exceeded (reached {reached})")]
    CapExceeded { cap: usize, reached: usize },

    #[error("refusing to enumerate: an estimated {estimate:.0} districts exceeds the cap of {cap}")]
    CapEstimate { cap: usize, estimate: f64 },

    #[error("only {achieved} of {requested} distinct districts could be sampled")]
    InsufficientDistricts { achieved: usize, requested: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("missing input: {0}")]
    Missing(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(what: &'static str, message: impl Into<String>) -> Self {
        Error::Validation {
            what,
            message: message.into(),
        }
    }

    pub(crate) fn parse(source_name: &str, err: &serde_json::Error) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }

    /// True for errors caused by user input rather than internal failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Validation { .. }
                | Error::Degenerate(_)
                | Error::Infeasible(_)
                | Error::UnknownUnit(_)
                | Error::Missing(_)
                | Error::TooLarge(..)
                | Error::CapExceeded { .. }
                | Error::CapEstimate { .. }
                | Error::InsufficientDistricts { .. }
        )
    }
}
