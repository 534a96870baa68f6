use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition or a priori bound was violated by the input.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A coefficient bound failed at a specific cell.
    #[error("a priori bound violated at cell {cell}: {what}")]
    Bound { cell: usize, what: String },

    /// The assembled system is (numerically) singular. This is the
    /// Dirichlet eigenvalue regime; impedance problems never land here.
    #[error("eigenvalue regime: {0}")]
    EigenvalueRegime(String),

    /// Iterative solver breakdown or stagnation.
    #[error("solver breakdown: {0}")]
    Breakdown(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::EigenvalueRegime(_) | Error::Breakdown(_))
    }
}
