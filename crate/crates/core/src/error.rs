use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("window mismatch: {0}")]
    WindowMismatch(String),
    #[error("singular operator: {0}")]
    Singular(String),
    /// The ++ block of an operator is not invertible, so the section τ is undefined there.
    #[error("outside W: {0}")]
    OutsideDomain(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("no convergence: {0}")]
    Convergence(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors that indicate a broken mathematical invariant rather than bad input.
    pub fn is_invariant_violation(&self) -> bool {
        matches!(self, Error::Invariant(_) | Error::Convergence(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
