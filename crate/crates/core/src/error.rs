//! Crate-wide error type.

use alloc::string::String;
use core::fmt;

/// Errors produced by model construction, training, and query paths.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A rater or item index fell outside the model or matrix bounds.
    IndexOutOfRange { kind: &'static str, index: usize, bound: usize },
    /// Two operands disagreed on dimensionality.
    DimensionMismatch { expected: usize, got: usize, context: &'static str },
    /// Cosine similarity requested for a zero-norm vector.
    ZeroNormVector { item: Option<usize> },
    /// A rating value is not representable on the declared scale.
    OffScaleRating { value: f64 },
    /// The same (rater, item) pair appeared more than once.
    DuplicateRating { rater: usize, item: usize },
    /// A non-finite value showed up where only finite data is allowed.
    NonFinite { context: &'static str },
    /// Hyperparameter outside its allowed range.
    InvalidHyperparam { name: &'static str, value: f64 },
    /// Training produced a non-finite loss.
    Diverged { epoch: usize },
    /// The ridge system could not be factorized.
    SingularSystem { anchor: usize },
    /// An operation needs more data than was supplied.
    NotEnoughData { context: &'static str, needed: usize, got: usize },
    /// Metric undefined for the given input (e.g. Pearson of a constant list).
    DegenerateInput { context: &'static str },
    /// Free-form validation failure.
    Invalid(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::IndexOutOfRange { kind, index, bound } => {
                write!(f, "{kind} index {index} out of range (bound {bound})")
            }
            Error::DimensionMismatch { expected, got, context } => {
                write!(f, "dimension mismatch in {context}: expected {expected}, got {got}")
            }
            Error::ZeroNormVector { item: Some(i) } => {
                write!(f, "zero-norm feature vector for item {i}: cosine similarity undefined")
            }
            Error::ZeroNormVector { item: None } => {
                write!(f, "zero-norm vector: cosine similarity undefined")
            }
            Error::OffScaleRating { value } => {
                write!(f, "rating value {value} is not on the declared scale")
            }
            Error::DuplicateRating { rater, item } => {
                write!(f, "duplicate rating for (rater {rater}, item {item})")
            }
            Error::NonFinite { context } => write!(f, "non-finite value in {context}"),
            Error::InvalidHyperparam { name, value } => {
                write!(f, "invalid hyperparameter {name} = {value}")
            }
            Error::Diverged { epoch } => {
                write!(f, "training diverged: loss became non-finite at epoch {epoch}")
            }
            Error::SingularSystem { anchor } => {
                write!(
                    f,
                    "ridge system for anchor {anchor} is singular; use a regularization lambda > 0"
                )
            }
            Error::NotEnoughData { context, needed, got } => {
                write!(f, "{context}: needs at least {needed}, got {got}")
            }
            Error::DegenerateInput { context } => write!(f, "degenerate input: {context}"),
            Error::Invalid(msg) => write!(f, "{msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
