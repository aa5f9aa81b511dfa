use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("mode index {index} out of range for {modes} mode(s)")]
    ModeOutOfRange { index: usize, modes: usize },

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("branch probabilities sum to {0}, expected 1")]
    ProbabilitySum(f64),

    #[error("replacement channel on mode {0}, which is correlated with other modes")]
    UnsupportedReplacement(usize),

    #[error("conditioning on an outcome with zero probability density")]
    ZeroDensity,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
