use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by the solvers and simulators.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("truncation mismatch: measure has N = {measure}, claim has N = {claim}")]
    TruncationMismatch { measure: u32, claim: u32 },

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("inadmissible strategy: {0}")]
    InadmissibleStrategy(String),

    #[error("conjugate unbounded above at y = {y} (search reached |x| = {reached:e})")]
    UnboundedConjugate { y: f64, reached: f64 },

    #[error("unsupported entropy spec for this operation: {0}")]
    UnsupportedSpec(String),

    #[error("entropy cap {cap} below minimal achievable entropy {minimum}")]
    InfeasibleCap { cap: f64, minimum: f64 },

    #[error("no separating element: N1 is empty (degenerate market)")]
    EmptyN1,

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("quadrature did not converge: error estimate {error:e} after {subdivisions} subdivisions")]
    QuadratureNonConvergence { error: f64, subdivisions: usize },

    #[error("horizon too short: residual passage mass {residual:e} exceeds budget {budget:e}")]
    HorizonTooShort { residual: f64, budget: f64 },

    #[error("series summation failed: {0}")]
    Series(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
