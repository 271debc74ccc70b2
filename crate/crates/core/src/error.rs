use std::path::PathBuf;

/// Errors raised by the numerical routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid precision policy: {0}")]
    InvalidPrecision(String),
    #[error("series did not converge within {cap} terms (tail bound {tail:e})")]
    NonConvergence { cap: usize, tail: f64 },
    #[error("integrand is not integrable at 0: endpoint exponent {0} <= -1")]
    NonIntegrable(f64),
    #[error("quadrature did not converge after {levels} levels (last change {change:e})")]
    QuadratureInconclusive { levels: u32, change: f64 },
    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
    #[error("jet division by a jet with zero constant term")]
    ZeroDivisor,
    #[error("jet order {have} is insufficient, need {need}")]
    InsufficientJetOrder { have: usize, need: usize },
    #[error("zero #{index} violates the real-part-dominating condition (Re(lambda) <= 0)")]
    NotRealPartDominating { index: usize },
    #[error("zero #{index} violates Re(z^2) > 0, |Im z| <= M for the even transform")]
    EvenHypothesis { index: usize },
    #[error("zero sequence contains the zero value at index {0}")]
    ZeroRoot(usize),
    #[error("non-real zero #{0} has no conjugate partner")]
    MissingConjugate(usize),
    #[error("coefficient a_{index} does not decay (-log|a_n| <= 0); order >= 1 is out of scope")]
    NotDecaying { index: usize },
    #[error("pole: x + lambda = 0 for zero #{0}")]
    Pole(usize),
    #[error("t must be positive, got {0}")]
    NonPositiveTime(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("ordinates must be positive and strictly increasing (line {line})")]
    NonIncreasing { line: usize },
    #[error("zero list is empty")]
    EmptyZeroList,
    #[error("value is not certified positive: {0}")]
    NotPositive(String),
    #[error("grid span too small: {0}")]
    InsufficientGrid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
