use thiserror::Error;

/// Errors produced by the library.
///
/// The variants follow the failure classes the CLI maps onto exit codes:
/// structural and domain problems are caller errors, numeric problems come
/// from evaluation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Shapes or sizes of the inputs do not agree.
    #[error("structural error: {0}")]
    Structure(String),

    /// A value lies outside the domain an operation accepts.
    #[error("domain error: {0}")]
    Domain(String),

    /// A transform was requested for an activation that does not admit it.
    #[error("unsupported transform: {0}")]
    Unsupported(String),

    /// A bound configuration is invalid for the requested formula.
    #[error("config error: {0}")]
    Config(String),

    /// Evaluation produced a non-finite value.
    #[error("non-finite value at layer {layer}")]
    NonFinite { layer: usize },

    /// A refused enumeration, carrying the budget it would have needed.
    #[error("budget exceeded: requires {required} points, budget is {budget}")]
    Budget { required: u128, budget: u128 },

    /// Adaptive quadrature did not reach its tolerance.
    #[error("integration failed after {subdivisions} subdivisions (partial value {partial})")]
    Integration { partial: f64, subdivisions: usize },

    #[error("serialization error: {0}")]
    Serde(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn structure(msg: impl Into<String>) -> Error {
    Error::Structure(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
