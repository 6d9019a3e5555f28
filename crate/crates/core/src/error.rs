use alloc::string::String;

/// Errors produced by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A scalar argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Matrix or parameter shapes do not line up.
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    Dimension {
        context: String,
        expected: usize,
        found: usize,
    },
    /// A hit refers to a sensor the geometry does not contain.
    #[error("unknown dom_id {0}")]
    UnknownDom(u32),
    /// Structural invariant violated by an input (geometry, event, cuts).
    #[error("validation error: {0}")]
    Validation(String),
    /// Configuration value rejected.
    #[error("config error: {0}")]
    Config(String),
    /// Operation requires data that is not present.
    #[error("empty input: {0}")]
    Empty(String),
    /// A track does not cross the instrumented volume.
    #[error("track does not intersect the instrumented volume")]
    NoIntersection,
    /// Training produced a non-finite loss.
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    Divergence { epoch: usize, batch: usize },
    /// Mismatched cache or similar internal inconsistency.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(context: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::Dimension {
            context: context.into(),
            expected,
            found,
        }
    }
}
