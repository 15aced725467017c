//! Crate-wide error type.

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("probability vector must have at least one entry")]
    Empty,
    #[error("entry {index} is negative: {value}")]
    NegativeEntry { index: usize, value: f64 },
    #[error("entries sum to {sum}, which is not 1 within 1e-12")]
    NotNormalized { sum: f64 },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("{what} supports n <= {max}, got {n}")]
    TooLarge {
        what: &'static str,
        n: usize,
        max: usize,
    },
    #[error("{what} requires n >= {min}, got {n}")]
    TooSmall {
        what: &'static str,
        n: usize,
        min: usize,
    },
    #[error("negative input: {0}")]
    NegativeInput(f64),
    #[error("radius {0} is outside [0, 1]")]
    InvalidRadius(f64),
    #[error("seed node {node} is outside 1..={n}")]
    InvalidSeed { node: usize, n: usize },
    #[error("largest or smallest entry is tied within 1e-12; flow direction is ambiguous")]
    DegenerateExtremes,
    #[error("negative argument: {0}")]
    NegativeArgument(f64),
    #[error("interval division by zero-containing divisor [{lo}, {hi}]")]
    DivisionByZeroInterval { lo: f64, hi: f64 },
    #[error("interval sqrt of negative lower endpoint {0}")]
    NegativeSqrt(f64),
    #[error("interval extension requires a nonnegative domain, got lower endpoint {0}")]
    NegativeDomain(f64),
    #[error("certification failed: {0}")]
    CertificationFailed(String),
    #[error("index k = {k} is outside 1..={m}")]
    OutOfRange { k: usize, m: usize },
    #[error("parameter {name} = {value} is outside its valid range")]
    ParameterOutOfRange { name: &'static str, value: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
