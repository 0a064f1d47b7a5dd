use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("kernel evaluated on the diagonal x = y")]
    SingularPoint,
    #[error("tail model is not integrable: {0}")]
    DivergentTail(String),
    #[error("quadrature panel budget exhausted (value {value:e}, error estimate {error:e})")]
    QuadratureBudget { value: f64, error: f64 },
    #[error("integrand is not integrable near {location}")]
    NonIntegrable { location: &'static str },
    #[error("case condition mismatch: {0}")]
    CaseMismatch(String),
    #[error("no local model at boundary node {0}")]
    BoundaryNode(usize),
    #[error("stencil lost monotonicity: {0}")]
    NonMonotoneStencil(String),
    #[error("linear system is singular at pivot {0}")]
    SingularSystem(usize),
    #[error("iteration budget exhausted after {iterations} iterations (residual {residual:e})")]
    IterationBudget { iterations: usize, residual: f64 },
    #[error("policy iteration entered a cycle of length {0}")]
    PolicyCycle(usize),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
