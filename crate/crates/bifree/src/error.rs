use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("partition size {n} exceeds the enumeration bound {bound}")]
    BoundExceeded { n: usize, bound: usize },
    #[error("malformed partition: {0}")]
    MalformedPartition(String),
    #[error("partition is not non-crossing in the standard order")]
    NotNonCrossing,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid shape string {0:?} (use letters l and r)")]
    BadShape(String),
    #[error("inconsistent cuts: {0}")]
    InconsistentCuts(String),
    #[error("matrix is singular or ill-conditioned (condition estimate {cond:.3e})")]
    Singular { cond: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("Fock space too large: dimension {dim} exceeds cap {cap}")]
    CapExceeded { dim: usize, cap: usize },
    #[error("moment with {letters} Fock letters is out of contract at truncation depth {depth}")]
    OrderTooHigh { letters: usize, depth: usize },
    #[error("invalid word: {0}")]
    InvalidWord(String),
    #[error("hypothesis violated: residual {residual:.3e}")]
    HypothesisViolated { residual: f64 },
    #[error("point norm {norm:.3e} exceeds the radius {rho:.3e}")]
    NormTooLarge { norm: f64, rho: f64 },
    #[error("fixed-point iteration did not converge after {iterations} steps (last step {last_step:.3e})")]
    NoConvergence { iterations: usize, last_step: f64 },
    #[error("not a conditional expectation: {0}")]
    NotConditionalExpectation(String),
    #[error("cumulant specification is not multilinear (probe residual {0:.3e})")]
    NonMultilinearSpec(f64),
    #[error("unknown check {name:?}; valid names: {valid}")]
    UnknownCheck { name: String, valid: String },
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
