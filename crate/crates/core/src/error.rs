use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("{op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// An iterative method ran out of iterations. `lo`/`hi` carry the best
    /// bracket known when it stopped.
    #[error("{op}: no convergence after {iterations} iterations (bracket [{lo:e}, {hi:e}])")]
    NoConvergence {
        op: &'static str,
        iterations: usize,
        lo: f64,
        hi: f64,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
}

pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Error {
    Error::Domain {
        op,
        msg: msg.into(),
    }
}
