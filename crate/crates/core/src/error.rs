use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid propensity {0}: must lie in (0, 1]")]
    InvalidPropensity(f64),

    #[error("labeled observation {index} carries no propensity")]
    MissingPropensity { index: usize },

    #[error("not representable: {0}")]
    NotRepresentable(String),

    #[error("hypothesis class has {size} members, above the enumeration guard of {limit}")]
    EnumerationGuard { size: u128, limit: u128 },

    #[error("covariates must be one-dimensional, found dimension {0}")]
    NotOneDimensional(usize),

    #[error("Bayes classifier is not a member of the hypothesis class (approximation error is nonzero)")]
    ApproximationErrorNonzero,

    #[error("lower bound requires n * e_m >= V, got n * e_m = {n_em} < V = {v}")]
    HypothesisViolated { n_em: f64, v: usize },

    #[error("distributions must differ in exactly one coordinate of b, found {0}")]
    NotAdjacent(usize),

    #[error("observation {index} does not lie on the hypothesis class support")]
    OffSupport { index: usize },

    #[error("fixed-point residual does not change sign on the search bracket")]
    NonBracketing,

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field: field.into(), reason: reason.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
