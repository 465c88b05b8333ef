use thiserror::Error;

pub type Result<T> = std::result::Result<T, PufferError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PufferError {
    /// Shape mismatch, non-finite entries, or otherwise malformed input.
    #[error("invalid input: {0}")]
    Input(String),

    /// The matrix does not have the rank an operation requires.
    #[error("rank deficient: {0}")]
    Rank(String),

    /// An argument falls outside the domain of a function (e.g. a penalty
    /// derivative evaluated at zero).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient degrees of freedom: {0}")]
    DegreesOfFreedom(String),

    /// An iterative kernel failed to converge.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl PufferError {
    /// Short machine-readable tag for the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            PufferError::Input(_) => "input",
            PufferError::Rank(_) => "rank",
            PufferError::Domain(_) => "domain",
            PufferError::DegreesOfFreedom(_) => "degrees_of_freedom",
            PufferError::Numerical(_) => "numerical",
        }
    }
}
