use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Gf2Error {
    #[error("{context}: dimension mismatch, expected {expected:?}, found {found:?}")]
    DimensionMismatch { context: &'static str, expected: (usize, usize), found: (usize, usize) },
    #[error("linear system has no solution")]
    NoSolution,
    #[error("matrix parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Gf2(#[from] Gf2Error),
    #[error("invalid code: {0}")]
    InvalidCode(String),
    #[error("truncation tail {tail:.3e} exceeds tolerance {tolerance:.3e}")]
    TailTooLarge { tail: f64, tolerance: f64 },
    #[error("input too large: {0}")]
    TooLarge(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("preselection needs at least two corrupt branches, got {0}")]
    InvalidPreselection(usize),
    #[error("rank deficient: {0}")]
    RankDeficient(String),
    #[error("schedule depth {achieved} exceeds target {target}")]
    DepthExceeded { achieved: usize, target: usize },
    #[error("unsupported protocol: {0}")]
    UnsupportedProtocol(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("factory global error {global_error:.3e} exceeds target {target:.3e}")]
    FactoryInvalid { global_error: f64, target: f64 },
    #[error("no valid factory: {0}")]
    NoValidFactory(String),
    #[error("unachievable: {0}")]
    Unachievable(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
