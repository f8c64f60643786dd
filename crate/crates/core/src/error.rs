use thiserror::Error;

/// Errors raised by the synthesis and validation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A model parameter is outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// Several independent constraints were violated; each is listed.
    #[error("invalid configuration: {}", .0.join("; "))]
    Constraints(Vec<String>),

    /// A requested point does not lie on the sampled Lévy grid.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// A truncation depth exceeds what the coefficient pyramid holds.
    #[error("depth error: requested depth {requested} but only {available} available ({what})")]
    Depth {
        what: &'static str,
        requested: usize,
        available: usize,
    },

    /// A grid would exceed the configured entry budget.
    #[error("memory budget exceeded: {what} needs {needed} entries, budget is {budget}")]
    Budget {
        what: &'static str,
        needed: usize,
        budget: usize,
    },

    /// Not enough samples or replicates for a meaningful statistic.
    #[error("statistics error: {0}")]
    Statistics(String),

    /// Two samples were compared over different evaluation domains.
    #[error("domain mismatch: {0}")]
    Domain(String),

    /// Adaptive quadrature failed to reach its tolerance.
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    /// Malformed serialized data.
    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
