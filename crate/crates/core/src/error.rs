use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A point or parameter lies outside the set where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// An integrand could not be evaluated at a quadrature node.
    #[error("evaluation failed at node {node:?}: {message}")]
    Evaluation { node: [f64; 3], message: String },

    #[error("singular input: {0}")]
    SingularInput(String),

    #[error("search failed: {0}")]
    SearchFailure(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
