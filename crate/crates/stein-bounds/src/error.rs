use thiserror::Error;

/// Errors produced by the library.
///
/// Note that *inapplicability* of a bound (a hypothesis such as `eps < 1`
/// failing) is not an error: it is reported as a value through
/// [`crate::bounds::BoundValue`], so that parameter sweeps can tabulate
/// applicability regions. `Error` is reserved for genuine misuse (domain
/// violations), bad configuration, and numerical failure.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A run configuration is inconsistent or incomplete.
    #[error("configuration error: {0}")]
    Config(String),

    /// A numerical procedure failed to converge or overflowed.
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
