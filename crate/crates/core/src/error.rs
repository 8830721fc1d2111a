use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A sampling constraint (such as `c <= pi * L`) is violated.
    #[error("constraint violation: {0}")]
    Constraint(String),
    /// The radial quadrature is too coarse for the requested bandlimit.
    #[error("insufficient resolution: {0}")]
    Resolution(String),
    /// The supplied eigensystems do not cover every index admitted by the truncation rule.
    #[error("insufficient coverage: {0}")]
    Coverage(String),
    /// A problem exceeds a configured size cap.
    #[error("size limit exceeded: {0}")]
    Size(String),
    /// A least-squares fit could not be formed.
    #[error("fit error: {0}")]
    Fit(String),
    /// Samples or coefficients are missing or inconsistent with the basis.
    #[error("invalid input: {0}")]
    Input(String),
    /// A file header or body does not follow the expected format.
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
