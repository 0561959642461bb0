use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{0} is not a prime")]
    NotPrime(u64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("quadrature did not converge: estimated error {achieved:e} exceeds tolerance {tolerance:e} after {panels} panels")]
    NonConvergence {
        achieved: f64,
        tolerance: f64,
        panels: usize,
    },

    #[error("rejection envelope violated at ({x}, {y}): density {density} exceeds bound {bound}")]
    EnvelopeViolation {
        x: f64,
        y: f64,
        density: f64,
        bound: f64,
    },

    #[error("test function support [-{beta}, {beta}] exceeds the admissible half-width {limit}")]
    SupportViolation { beta: f64, limit: f64 },

    #[error("no Satake data assigned at prime {0}")]
    MissingPrime(u64),

    #[error("trace table has no entry for divisor {0}")]
    MissingDivisor(u64),

    #[error("weight ({k1}, {k2}) outside the supported range: {reason}")]
    WeightRange { k1: u32, k2: u32, reason: &'static str },

    #[error("{what} = {value} outside the supported range {range}")]
    OutOfRange {
        what: &'static str,
        value: i64,
        range: &'static str,
    },

    #[error("cannot pair up a set of odd size {0}")]
    OddPairing(usize),

    #[error("sample {index}: {reason}")]
    Sampling { index: u64, reason: String },

    #[error("eigenvalue solver failed on sample {index}")]
    Eigen { index: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
