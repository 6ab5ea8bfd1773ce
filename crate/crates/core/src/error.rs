// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension {0}: must be at least 1")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {dim} is not divisible into qubit (2) x environment ({env})")]
    NotDivisible { dim: usize, env: usize },

    #[error("unsupported dimension N = {0} for this formula")]
    UnsupportedDimension(usize),

    #[error("non-finite value in numeric input: {0}")]
    NonFinite(&'static str),

    #[error("invalid index {0}")]
    InvalidIndex(i64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("eigendecomposition residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    Decomposition { residual: f64, tolerance: f64 },

    #[error("quadrature did not converge: refinement disagreement {disagreement:.3e} at t = {t}")]
    Accuracy { t: f64, disagreement: f64 },

    #[error("at least {required} samples are required, got {got}")]
    TooFewSamples { required: usize, got: usize },

    #[error("time grid must be strictly increasing with at least {0} points")]
    BadGrid(usize),

    #[error("integration horizon {horizon} too short: tail estimate {tail:.3e} exceeds {limit:.3e}")]
    Horizon { horizon: f64, tail: f64, limit: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
