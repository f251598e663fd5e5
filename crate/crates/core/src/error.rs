use thiserror::Error;

/// Errors raised by the numerical and combinatorial routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("vector length {got} does not match matrix dimension {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("truncation radius {radius} is too small for degree {degree} at band width {band_width} (need at least {required})")]
    TruncationTooSmall {
        radius: usize,
        degree: usize,
        band_width: usize,
        required: usize,
    },

    #[error("enumeration of length-{length} paths at band width {band_width} exceeds the cap (length <= {max_length}, band width <= {max_band_width})")]
    EnumerationCap {
        length: usize,
        band_width: usize,
        max_length: usize,
        max_band_width: usize,
    },

    #[error("index {index} out of range (maximum {max})")]
    OutOfRange { index: i64, max: i64 },

    #[error("path has an edge traversed an odd number of times")]
    OddMultiplicity,

    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),

    #[error("points {0} and {1} are closer than the separation floor")]
    DegeneratePoints(usize, usize),

    #[error("argument too close to the singular point z = 1 (|1 - z| = {0:e})")]
    NearSingularity(f64),

    #[error("banded solver broke down at row {row}: pivot magnitude {pivot:e}")]
    SolverBreakdown { row: usize, pivot: f64 },

    #[error("graph is disconnected")]
    Disconnected,

    #[error("genus {genus} exceeds the supported maximum {max}")]
    GenusTooLarge { genus: usize, max: usize },

    #[error("not enough moments: need degree {required}, have {available}")]
    InsufficientDegree { required: usize, available: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
